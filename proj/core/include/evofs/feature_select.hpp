#pragma once

// Wrapper feature selection: feature masks are encoded as particles in
// [0, 1]^d, thresholded at 0.5, and scored by training a classifier on the
// masked columns and measuring it on a held-out part of the training data.

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "evofs/classifiers.hpp"
#include "evofs/dataset.hpp"
#include "evofs/evo.hpp"
#include "evofs/metrics.hpp"

namespace evofs::fs {

class FeatureMask {
 public:
  // Throws Error(kUsage) if no bit is set.
  explicit FeatureMask(std::vector<bool> bits);

  static FeatureMask all(std::size_t d);

  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool operator[](std::size_t j) const { return bits_[j]; }
  const std::vector<bool>& bits() const noexcept { return bits_; }
  std::vector<std::size_t> indices() const;
  std::string key() const;  // "0101..." for caching and display

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;

 private:
  std::vector<bool> bits_;
  std::size_t count_ = 0;
};

// bit_j = position_j >= 0.5; an all-zero result keeps only argmax(position).
FeatureMask binarize(std::span<const double> position);

struct CostWeights {
  double accuracy = 1.0;  // w1, on (1 - accuracy)
  double fpr = 0.0;       // w2
  double fnr = 0.0;       // w3
  double feature_ratio = 0.0;  // w4, on selected/total; off by default

  void validate() const;
  nlohmann::json to_json() const;
};

// w1 (1 - acc) + w2 FPR + w3 FNR + w4 (count / d), with macro FPR/FNR.
double weighted_cost(const metrics::Metrics& m, const CostWeights& w,
                     std::size_t selected, std::size_t total);

struct CostEvaluation {
  double cost = 0.0;
  metrics::Metrics inner_metrics;
};

struct InnerValidation {
  std::uint64_t seed = 0x5eed;
  // 0 uses a stratified 75/25 holdout; k >= 2 runs stratified k-fold and
  // pools the confusion matrices.
  std::size_t folds = 0;
};

// Scores masks against fixed inner splits of `train`. Results are memoized
// by mask; evaluate() may be called concurrently.
class MaskEvaluator {
 public:
  MaskEvaluator(const Dataset& train, ml::ClassifierSpec spec, CostWeights weights,
                InnerValidation validation = {});

  CostEvaluation evaluate(const FeatureMask& mask) const;

  std::size_t features() const noexcept { return train_.cols(); }
  std::size_t cache_size() const;
  std::size_t classifier_fits() const;

 private:
  struct Fold {
    std::vector<std::size_t> fit_rows;
    std::vector<std::size_t> check_rows;
  };

  CostEvaluation compute(const FeatureMask& mask) const;

  const Dataset& train_;
  ml::ClassifierSpec spec_;
  CostWeights weights_;
  InnerValidation validation_;
  std::vector<Fold> folds_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, CostEvaluation> cache_;
  mutable std::size_t fits_ = 0;
};

// One-shot cost of a mask; builds the inner split from `validation.seed`.
// Throws Error(kStratification) if a class has fewer than 2 rows.
CostEvaluation fs_cost(const FeatureMask& mask, const Dataset& train,
                       const ml::ClassifierSpec& spec, const CostWeights& weights,
                       const InnerValidation& validation = {});

struct FsResult {
  FeatureMask mask;
  double cost = 0.0;
  metrics::Metrics inner_metrics;
  evo::OptResult opt;
  std::vector<std::string> selected_names;
  CostWeights weights;
  std::uint64_t seed = 0;
  std::uint64_t inner_seed = 0;

  nlohmann::json to_json() const;
};

FsResult select_features(const Dataset& train, const ml::ClassifierSpec& spec,
                         const CostWeights& weights, const evo::EvoConfig& config,
                         const InnerValidation& validation = {});

// Reads the mask of an FsResult JSON document.
FeatureMask mask_from_json(const nlohmann::json& j);

}  // namespace evofs::fs
