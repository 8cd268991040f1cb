#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace evofs {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  const std::vector<double>& values() const noexcept { return values_; }

  void append_row(std::span<const double> row);
  Matrix select_rows(std::span<const std::size_t> rows) const;
  Matrix select_columns(std::span<const std::size_t> cols) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

using Label = int;

// Numeric features plus dense integer labels in [0, class_names.size()).
struct Dataset {
  Matrix features;
  std::vector<Label> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t rows() const noexcept { return features.rows(); }
  std::size_t cols() const noexcept { return features.cols(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }

  // Rows in the given order; class names are kept so ids stay stable.
  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::size_t> cols) const;

  std::vector<std::size_t> class_counts() const;

  // Throws Error(kUsage) on shape mismatch or out-of-range labels.
  void validate() const;
};

}  // namespace evofs
