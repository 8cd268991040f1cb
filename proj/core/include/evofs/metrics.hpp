#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evofs/dataset.hpp"

namespace evofs::metrics {

// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0)
      : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  std::size_t n_classes() const noexcept { return n_; }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) {
    return counts_[truth * n_ + predicted];
  }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

  nlohmann::json to_json() const;
  static ConfusionMatrix from_json(const nlohmann::json& j);
  // Header row of predicted class names, one row per true class.
  std::string to_csv(std::span<const std::string> class_names) const;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

// Throws Error(kUsage) on length mismatch or a label outside [0, n_classes).
ConfusionMatrix confusion_matrix(std::span<const Label> truth,
                                 std::span<const Label> predicted,
                                 std::size_t n_classes);

struct ClassScores {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};

enum class Averaging { kMacro, kWeighted };

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  Averaging averaging = Averaging::kMacro;
  std::vector<ClassScores> per_class;
  double train_time = 0.0;  // seconds
  double test_time = 0.0;

  // Timings are left out when include_timings is false.
  nlohmann::json to_json(bool include_timings = true) const;
};

// One-vs-rest counts per class; 0/0 ratios are 0. Weighted averaging weighs
// classes by their true support. Throws Error(kMetrics) on an empty matrix.
Metrics scores(const ConfusionMatrix& cm, Averaging averaging = Averaging::kMacro);

inline double harmonic_mean(double precision, double recall) noexcept {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

}  // namespace evofs::metrics
