#include <chrono>
#include <fstream>
#include <sstream>

#include "evofs/classifiers.hpp"
#include "evofs/data.hpp"
#include "evofs/error.hpp"

namespace evofs::ml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorKind::kConfig, what);
}

void validate_cart(const CartSpec& s, const std::string& prefix) {
  if (s.min_samples_split < 2) bad_config(prefix + "min_samples_split: must be >= 2");
  if (s.min_samples_leaf < 1) bad_config(prefix + "min_samples_leaf: must be >= 1");
  if (s.max_features && *s.max_features < 1) bad_config(prefix + "max_features: must be >= 1");
}

nlohmann::json optional_json(const std::optional<std::size_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<std::size_t> optional_size(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_string() && (v == "all" || v == "unlimited")) return std::nullopt;
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    bad_config(std::string(key) + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

nlohmann::json cart_json(const CartSpec& s) {
  return {{"max_depth", optional_json(s.max_depth)},
          {"min_samples_split", s.min_samples_split},
          {"min_samples_leaf", s.min_samples_leaf},
          {"max_features", optional_json(s.max_features)}};
}

CartSpec cart_from_json(const nlohmann::json& j) {
  CartSpec s;
  s.max_depth = optional_size(j, "max_depth");
  s.min_samples_split = j.value("min_samples_split", s.min_samples_split);
  s.min_samples_leaf = j.value("min_samples_leaf", s.min_samples_leaf);
  s.max_features = optional_size(j, "max_features");
  return s;
}

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

nlohmann::json tree_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label, n.samples, n.gini});
  }
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  nodes.reserve(j.size());
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<std::int32_t>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<std::int32_t>();
    node.right = n.at(3).get<std::int32_t>();
    node.label = n.at(4).get<Label>();
    node.samples = n.at(5).get<std::size_t>();
    node.gini = n.at(6).get<double>();
    nodes.push_back(node);
  }
  return DecisionTree(std::move(nodes));
}

constexpr int kModelFormatVersion = 1;

}  // namespace

void validate(const ClassifierSpec& spec) {
  std::visit(Overloaded{
                 [](const KnnSpec& s) {
                   if (s.k < 1) bad_config("knn.k: must be >= 1");
                 },
                 [](const CartSpec& s) { validate_cart(s, "cart."); },
                 [](const ForestSpec& s) {
                   if (s.n_trees < 1) bad_config("rf.n_trees: must be >= 1");
                   if (s.feature_subsample && *s.feature_subsample < 1) {
                     bad_config("rf.feature_subsample: must be >= 1");
                   }
                   validate_cart(s.tree, "rf.");
                 },
                 [](const SvmSpec& s) {
                   if (!(s.c > 0.0)) bad_config("svm.c: must be > 0");
                   if (s.gamma && !(*s.gamma > 0.0)) bad_config("svm.gamma: must be > 0");
                   if (!(s.tolerance > 0.0)) bad_config("svm.tolerance: must be > 0");
                   if (s.max_passes && *s.max_passes < 1) {
                     bad_config("svm.max_passes: must be >= 1");
                   }
                 },
             },
             spec);
}

std::string display_name(const ClassifierSpec& spec) {
  return std::visit(Overloaded{
                        [](const KnnSpec&) { return std::string("KNN"); },
                        [](const CartSpec&) { return std::string("D_Tree"); },
                        [](const ForestSpec&) { return std::string("RF"); },
                        [](const SvmSpec&) { return std::string("SVM"); },
                    },
                    spec);
}

nlohmann::json to_json(const ClassifierSpec& spec) {
  return std::visit(
      Overloaded{
          [](const KnnSpec& s) { return nlohmann::json{{"type", "knn"}, {"k", s.k}}; },
          [](const CartSpec& s) {
            nlohmann::json j = cart_json(s);
            j["type"] = "cart";
            return j;
          },
          [](const ForestSpec& s) {
            nlohmann::json j = cart_json(s.tree);
            j.erase("max_features");
            j["type"] = "rf";
            j["n_trees"] = s.n_trees;
            j["bootstrap"] = s.bootstrap;
            j["feature_subsample"] = optional_json(s.feature_subsample);
            j["seed"] = s.seed;
            return j;
          },
          [](const SvmSpec& s) {
            return nlohmann::json{
                {"type", "svm"},
                {"c", s.c},
                {"gamma", s.gamma ? nlohmann::json(*s.gamma) : nlohmann::json(nullptr)},
                {"tolerance", s.tolerance},
                {"max_passes", optional_json(s.max_passes)}};
          },
      },
      spec);
}

ClassifierSpec spec_from_json(const nlohmann::json& j) {
  if (j.is_string()) return spec_from_json(nlohmann::json{{"type", j}});
  if (!j.is_object() || !j.contains("type")) bad_config("classifier: missing \"type\"");
  std::string type = j.at("type").get<std::string>();
  for (char& c : type) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  ClassifierSpec spec;
  if (type == "knn") {
    KnnSpec s;
    s.k = j.value("k", s.k);
    spec = s;
  } else if (type == "cart" || type == "dtree" || type == "d_tree" || type == "tree") {
    spec = cart_from_json(j);
  } else if (type == "rf" || type == "forest") {
    ForestSpec s;
    s.tree = cart_from_json(j);
    s.tree.max_features.reset();
    s.n_trees = j.value("n_trees", s.n_trees);
    s.bootstrap = j.value("bootstrap", s.bootstrap);
    s.feature_subsample = optional_size(j, "feature_subsample");
    s.seed = j.value("seed", s.seed);
    s.threads = j.value("threads", s.threads);
    spec = s;
  } else if (type == "svm") {
    SvmSpec s;
    s.c = j.value("c", s.c);
    if (j.contains("gamma") && !j.at("gamma").is_null()) s.gamma = j.at("gamma").get<double>();
    s.tolerance = j.value("tolerance", s.tolerance);
    s.max_passes = optional_size(j, "max_passes");
    spec = s;
  } else {
    bad_config("classifier.type: unknown \"" + type + "\" (expected knn, cart, rf, svm)");
  }
  validate(spec);
  return spec;
}

bool Model::converged() const noexcept {
  if (const auto* svm = std::get_if<SvmModel>(&state_)) {
    for (const auto& m : svm->machines) {
      if (!m.converged) return false;
    }
  }
  return true;
}

std::string Model::algorithm() const {
  return std::visit(Overloaded{
                        [](const KnnModel&) { return std::string("knn"); },
                        [](const CartModel&) { return std::string("cart"); },
                        [](const ForestModel&) { return std::string("rf"); },
                        [](const SvmModel&) { return std::string("svm"); },
                    },
                    state_);
}

Label Model::predict_one(std::span<const double> x) const {
  return std::visit(Overloaded{
                        [&](const KnnModel& m) { return knn_predict(m, x, n_classes_); },
                        [&](const CartModel& m) { return m.tree.predict(x); },
                        [&](const ForestModel& m) { return forest_predict(m, x, n_classes_); },
                        [&](const SvmModel& m) { return svm_predict(m, x, n_classes_); },
                    },
                    state_);
}

std::vector<Label> Model::predict(const Matrix& features) const {
  if (features.cols() != n_features_) {
    throw Error(ErrorKind::kUsage, "predict: model expects " + std::to_string(n_features_) +
                                       " features, got " + std::to_string(features.cols()));
  }
  std::vector<Label> out(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) out[r] = predict_one(features.row(r));
  return out;
}

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["format"] = "evofs-model";
  j["version"] = kModelFormatVersion;
  j["algorithm"] = algorithm();
  j["n_features"] = n_features_;
  j["n_classes"] = n_classes_;
  j["train_time"] = train_time_;
  j["state"] = std::visit(
      Overloaded{
          [](const KnnModel& m) {
            return nlohmann::json{{"k", m.k}, {"x", matrix_json(m.x)}, {"y", m.y}};
          },
          [](const CartModel& m) { return nlohmann::json{{"tree", tree_json(m.tree)}}; },
          [](const ForestModel& m) {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : m.trees) trees.push_back(tree_json(t));
            return nlohmann::json{{"trees", trees}};
          },
          [](const SvmModel& m) {
            nlohmann::json machines = nlohmann::json::array();
            for (const auto& mc : m.machines) {
              machines.push_back({{"positive", mc.positive},
                                  {"support_vectors", matrix_json(mc.support_vectors)},
                                  {"coef", mc.coef},
                                  {"alpha", mc.alpha},
                                  {"bias", mc.bias},
                                  {"converged", mc.converged}});
            }
            nlohmann::json s{{"gamma", m.gamma}, {"c", m.c}, {"machines", machines}};
            s["constant"] = m.constant ? nlohmann::json(*m.constant) : nlohmann::json(nullptr);
            return s;
          },
      },
      state_);
  return j;
}

Model Model::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "evofs-model") throw Error(ErrorKind::kParse, "not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::kParse, "unsupported model version");
    }
    const std::string algorithm = j.at("algorithm").get<std::string>();
    const auto& s = j.at("state");
    State state;
    if (algorithm == "knn") {
      state = KnnModel{s.at("k").get<std::size_t>(), matrix_from_json(s.at("x")),
                       s.at("y").get<std::vector<Label>>()};
    } else if (algorithm == "cart") {
      state = CartModel{tree_from_json(s.at("tree"))};
    } else if (algorithm == "rf") {
      ForestModel m;
      for (const auto& t : s.at("trees")) m.trees.push_back(tree_from_json(t));
      state = std::move(m);
    } else if (algorithm == "svm") {
      SvmModel m;
      m.gamma = s.at("gamma").get<double>();
      m.c = s.at("c").get<double>();
      if (!s.at("constant").is_null()) m.constant = s.at("constant").get<Label>();
      for (const auto& mc : s.at("machines")) {
        SvmMachine machine;
        machine.positive = mc.at("positive").get<Label>();
        machine.support_vectors = matrix_from_json(mc.at("support_vectors"));
        machine.coef = mc.at("coef").get<std::vector<double>>();
        machine.alpha = mc.at("alpha").get<std::vector<double>>();
        machine.bias = mc.at("bias").get<double>();
        machine.converged = mc.at("converged").get<bool>();
        m.machines.push_back(std::move(machine));
      }
      state = std::move(m);
    } else {
      throw Error(ErrorKind::kParse, "unknown model algorithm \"" + algorithm + "\"");
    }
    Model model(std::move(state), j.at("n_features").get<std::size_t>(),
                j.at("n_classes").get<std::size_t>());
    model.set_train_time(j.at("train_time").get<double>());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed model file: ") + e.what());
  }
}

Model train(const ClassifierSpec& spec, const Dataset& data, std::uint64_t seed) {
  validate(spec);
  data.validate();
  if (data.rows() == 0) throw Error(ErrorKind::kUsage, "train: empty dataset");
  if (data.n_classes() == 0) throw Error(ErrorKind::kUsage, "train: no classes");

  const auto start = Clock::now();
  Model::State state = std::visit(
      Overloaded{
          [&](const KnnSpec& s) -> Model::State { return train_knn(s, data); },
          [&](const CartSpec& s) -> Model::State {
            std::vector<std::size_t> rows(data.rows());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            Rng rng(derive_seed(seed, {0x63617274ULL}));
            return CartModel{grow_tree(data.features, data.labels, rows, data.n_classes(), s,
                                       &rng)};
          },
          [&](const ForestSpec& s) -> Model::State { return train_forest(s, data, seed); },
          [&](const SvmSpec& s) -> Model::State { return train_svm(s, data); },
      },
      spec);
  Model model(std::move(state), data.cols(), data.n_classes());
  model.set_train_time(seconds_since(start));
  return model;
}

Prediction predict(const Model& model, const Matrix& features) {
  const auto start = Clock::now();
  Prediction out;
  out.labels = model.predict(features);
  out.seconds = seconds_since(start);
  return out;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  data::write_file_atomic(path, model.to_json().dump());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return Model::from_json(j);
}

}  // namespace evofs::ml
