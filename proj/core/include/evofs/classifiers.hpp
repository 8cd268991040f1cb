#pragma once

// The four reference classifiers (k-nearest neighbours, CART decision tree,
// random forest, RBF-kernel SVM) behind one train/predict contract. Models
// are immutable once trained and safe to share across threads.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "evofs/dataset.hpp"
#include "evofs/rng.hpp"

namespace evofs::ml {

struct KnnSpec {
  std::size_t k = 5;
};

struct CartSpec {
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> max_features;  // all when empty
};

struct ForestSpec {
  std::size_t n_trees = 100;
  CartSpec tree;  // tree.max_features is ignored; see feature_subsample
  bool bootstrap = true;
  std::optional<std::size_t> feature_subsample;  // ceil(sqrt(d)) when empty
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct SvmSpec {
  double c = 1.0;
  std::optional<double> gamma;  // 1 / d when empty
  double tolerance = 1e-3;
  std::optional<std::size_t> max_passes;  // 10 * n when empty
};

using ClassifierSpec = std::variant<KnnSpec, CartSpec, ForestSpec, SvmSpec>;

// Throws Error(kConfig) for out-of-range hyperparameters.
void validate(const ClassifierSpec& spec);

// Display names: "KNN", "D_Tree", "RF", "SVM".
std::string display_name(const ClassifierSpec& spec);

nlohmann::json to_json(const ClassifierSpec& spec);
// Accepts {"type": "knn"|"cart"|"dtree"|"rf"|"svm", ...hyperparameters}.
ClassifierSpec spec_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Decision tree

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  Label label = 0;            // majority label of the node's samples
  std::size_t samples = 0;
  double gini = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  Label predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

// Greedy Gini CART over the given rows (in order). `rng` is consulted only
// when max_features restricts the candidate features at a split.
DecisionTree grow_tree(const Matrix& x, std::span<const Label> y,
                       std::span<const std::size_t> rows, std::size_t n_classes,
                       const CartSpec& spec, Rng* rng);

// ---------------------------------------------------------------------------
// SVM dual

// Solution of max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij subject to
// 0 <= a_i <= c and sum(a_i y_i) = 0; decision f(x) = sum a_i y_i K(x_i, x) + bias.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  bool converged = true;
  std::size_t passes = 0;
};

// Platt's sequential minimal optimization. `kernel(i, j)` must be symmetric;
// y holds +1/-1.
class KernelSource {
 public:
  virtual ~KernelSource() = default;
  virtual std::size_t size() const = 0;
  virtual double operator()(std::size_t i, std::size_t j) const = 0;
};

DualSolution solve_svm_dual(const KernelSource& kernel, std::span<const double> y,
                            double c, double tolerance, std::size_t max_passes);

double dual_objective(const KernelSource& kernel, std::span<const double> y,
                      std::span<const double> alpha);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// ---------------------------------------------------------------------------
// Trained models

struct KnnModel {
  std::size_t k = 5;
  Matrix x;
  std::vector<Label> y;
};

struct CartModel {
  DecisionTree tree;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

struct SvmMachine {
  Label positive = 0;           // class scored by this machine
  Matrix support_vectors;
  std::vector<double> coef;     // alpha_i * y_i
  std::vector<double> alpha;    // alpha_i, for inspection
  double bias = 0.0;
  bool converged = true;
};

struct SvmModel {
  double gamma = 1.0;
  double c = 1.0;
  // Two classes use one machine scoring class 1; more use one per class.
  std::vector<SvmMachine> machines;
  std::optional<Label> constant;  // set when training saw a single class
};

class Model {
 public:
  using State = std::variant<KnnModel, CartModel, ForestModel, SvmModel>;

  Model(State state, std::size_t n_features, std::size_t n_classes)
      : state_(std::move(state)), n_features_(n_features), n_classes_(n_classes) {}

  const State& state() const noexcept { return state_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  double train_time() const noexcept { return train_time_; }
  void set_train_time(double seconds) noexcept { train_time_ = seconds; }
  // False when an SVM machine stopped at max_passes.
  bool converged() const noexcept;

  std::string algorithm() const;

  // Throws Error(kUsage) when the width differs from training.
  std::vector<Label> predict(const Matrix& features) const;
  Label predict_one(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  State state_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  double train_time_ = 0.0;
};

// Throws Error(kUsage) for an empty dataset.
Model train(const ClassifierSpec& spec, const Dataset& data, std::uint64_t seed);

struct Prediction {
  std::vector<Label> labels;
  double seconds = 0.0;
};

Prediction predict(const Model& model, const Matrix& features);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// Per-algorithm pieces, exposed for tests and benchmarks.
KnnModel train_knn(const KnnSpec& spec, const Dataset& data);
Label knn_predict(const KnnModel& model, std::span<const double> x, std::size_t n_classes);
ForestModel train_forest(const ForestSpec& spec, const Dataset& data, std::uint64_t seed);
Label forest_predict(const ForestModel& model, std::span<const double> x,
                     std::size_t n_classes);
SvmModel train_svm(const SvmSpec& spec, const Dataset& data);
Label svm_predict(const SvmModel& model, std::span<const double> x, std::size_t n_classes);

// Lowest label among those with the highest count.
Label majority(std::span<const std::size_t> votes);

}  // namespace evofs::ml
