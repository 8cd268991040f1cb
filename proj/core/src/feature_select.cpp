#include "evofs/feature_select.hpp"

#include <algorithm>
#include <string>

#include "evofs/data.hpp"
#include "evofs/error.hpp"

namespace evofs::fs {

FeatureMask::FeatureMask(std::vector<bool> bits) : bits_(std::move(bits)) {
  count_ = static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
  if (count_ == 0) throw Error(ErrorKind::kUsage, "FeatureMask: no feature selected");
}

FeatureMask FeatureMask::all(std::size_t d) { return FeatureMask(std::vector<bool>(d, true)); }

std::vector<std::size_t> FeatureMask::indices() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) out.push_back(j);
  }
  return out;
}

std::string FeatureMask::key() const {
  std::string s(bits_.size(), '0');
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) s[j] = '1';
  }
  return s;
}

FeatureMask binarize(std::span<const double> position) {
  if (position.empty()) throw Error(ErrorKind::kUsage, "binarize: empty position");
  std::vector<bool> bits(position.size());
  bool any = false;
  for (std::size_t j = 0; j < position.size(); ++j) {
    bits[j] = position[j] >= 0.5;
    any = any || bits[j];
  }
  if (!any) {
    const auto it = std::max_element(position.begin(), position.end());
    bits[static_cast<std::size_t>(it - position.begin())] = true;
  }
  return FeatureMask(std::move(bits));
}

void CostWeights::validate() const {
  if (accuracy < 0.0 || fpr < 0.0 || fnr < 0.0 || feature_ratio < 0.0) {
    throw Error(ErrorKind::kConfig, "weights: every weight must be >= 0");
  }
  if (!(accuracy + fpr + fnr > 0.0)) {
    throw Error(ErrorKind::kConfig, "weights: w1 + w2 + w3 must be positive");
  }
}

nlohmann::json CostWeights::to_json() const {
  return {{"w1", accuracy}, {"w2", fpr}, {"w3", fnr}, {"w4", feature_ratio}};
}

double weighted_cost(const metrics::Metrics& m, const CostWeights& w,
                     std::size_t selected, std::size_t total) {
  double cost = w.accuracy * (1.0 - m.accuracy) + w.fpr * m.fpr + w.fnr * m.fnr;
  if (w.feature_ratio != 0.0 && total > 0) {
    cost += w.feature_ratio * static_cast<double>(selected) / static_cast<double>(total);
  }
  return cost;
}

MaskEvaluator::MaskEvaluator(const Dataset& train, ml::ClassifierSpec spec,
                             CostWeights weights, InnerValidation validation)
    : train_(train), spec_(std::move(spec)), weights_(weights), validation_(validation) {
  weights_.validate();
  ml::validate(spec_);
  train_.validate();
  if (validation_.folds == 0) {
    const data::SplitPair inner = data::split(train_, 0.75, validation_.seed);
    folds_.push_back(Fold{inner.train_rows, inner.test_rows});
  } else {
    const auto folds = data::stratified_folds(train_, validation_.folds, validation_.seed);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      Fold fold;
      fold.check_rows = folds[f];
      for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) fold.fit_rows.insert(fold.fit_rows.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(fold.fit_rows.begin(), fold.fit_rows.end());
      folds_.push_back(std::move(fold));
    }
  }
}

CostEvaluation MaskEvaluator::evaluate(const FeatureMask& mask) const {
  if (mask.size() != train_.cols()) {
    throw Error(ErrorKind::kUsage, "fs_cost: mask length " + std::to_string(mask.size()) +
                                       " differs from feature count " +
                                       std::to_string(train_.cols()));
  }
  const std::string key = mask.key();
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  CostEvaluation result = compute(mask);
  std::lock_guard lock(mutex_);
  ++fits_;
  cache_.insert_or_assign(key, result);
  return result;
}

CostEvaluation MaskEvaluator::compute(const FeatureMask& mask) const {
  const Dataset masked = train_.select_columns(mask.indices());
  metrics::ConfusionMatrix pooled(train_.n_classes());
  double train_time = 0.0;
  double test_time = 0.0;
  for (const Fold& fold : folds_) {
    const Dataset fit = masked.select_rows(fold.fit_rows);
    const Dataset check = masked.select_rows(fold.check_rows);
    const ml::Model model = ml::train(spec_, fit, validation_.seed);
    const ml::Prediction pred = ml::predict(model, check.features);
    pooled += metrics::confusion_matrix(check.labels, pred.labels, train_.n_classes());
    train_time += model.train_time();
    test_time += pred.seconds;
  }
  CostEvaluation out;
  out.inner_metrics = metrics::scores(pooled);
  out.inner_metrics.train_time = train_time;
  out.inner_metrics.test_time = test_time;
  out.cost = weighted_cost(out.inner_metrics, weights_, mask.count(), mask.size());
  return out;
}

std::size_t MaskEvaluator::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::size_t MaskEvaluator::classifier_fits() const {
  std::lock_guard lock(mutex_);
  return fits_;
}

CostEvaluation fs_cost(const FeatureMask& mask, const Dataset& train,
                       const ml::ClassifierSpec& spec, const CostWeights& weights,
                       const InnerValidation& validation) {
  return MaskEvaluator(train, spec, weights, validation).evaluate(mask);
}

FsResult select_features(const Dataset& train, const ml::ClassifierSpec& spec,
                         const CostWeights& weights, const evo::EvoConfig& config,
                         const InnerValidation& validation) {
  config.validate();
  if (train.cols() == 0) throw Error(ErrorKind::kUsage, "select_features: no features");
  const MaskEvaluator evaluator(train, spec, weights, validation);

  const evo::Objective objective = [&](std::span<const double> position) {
    return evaluator.evaluate(binarize(position)).cost;
  };
  evo::OptResult opt =
      evo::optimize(objective, evo::Bounds::uniform(train.cols(), 0.0, 1.0), config);

  FeatureMask mask = binarize(opt.best_position);
  const CostEvaluation best = evaluator.evaluate(mask);
  FsResult result{std::move(mask), best.cost, best.inner_metrics, std::move(opt), {},
                  weights, config.seed, validation.seed};
  for (std::size_t j : result.mask.indices()) {
    result.selected_names.push_back(train.feature_names.at(j));
  }
  return result;
}

nlohmann::json FsResult::to_json() const {
  nlohmann::json j;
  j["format"] = "evofs-selection";
  j["version"] = 1;
  std::vector<int> bits;
  for (bool b : mask.bits()) bits.push_back(b ? 1 : 0);
  j["mask"] = bits;
  j["selected_count"] = mask.count();
  j["total_features"] = mask.size();
  j["selected_names"] = selected_names;
  j["cost"] = cost;
  j["weights"] = weights.to_json();
  j["seed"] = seed;
  j["inner_seed"] = inner_seed;
  j["evaluations_used"] = opt.evaluations_used;
  j["best_fitness_history"] = opt.history;
  j["inner_metrics"] = inner_metrics.to_json(false);
  return j;
}

FeatureMask mask_from_json(const nlohmann::json& j) {
  const nlohmann::json& m = j.is_array() ? j : j.at("mask");
  std::vector<bool> bits;
  for (const auto& b : m) bits.push_back(b.get<int>() != 0);
  return FeatureMask(std::move(bits));
}

}  // namespace evofs::fs
