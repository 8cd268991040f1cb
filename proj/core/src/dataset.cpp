#include "evofs/dataset.hpp"

#include <string>

#include "evofs/error.hpp"

namespace evofs {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorKind::kUsage, "Matrix: value count does not match shape");
  }
}

void Matrix::append_row(std::span<const double> row) {
  if (rows_ == 0 && cols_ == 0) cols_ = row.size();
  if (row.size() != cols_) {
    throw Error(ErrorKind::kUsage, "Matrix::append_row: width mismatch");
  }
  values_.insert(values_.end(), row.begin(), row.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out;
  out.cols_ = cols_;
  out.rows_ = rows.size();
  out.values_.reserve(rows.size() * cols_);
  for (std::size_t r : rows) {
    const auto src = row(r);
    out.values_.insert(out.values_.end(), src.begin(), src.end());
  }
  return out;
}

Matrix Matrix::select_columns(std::span<const std::size_t> cols) const {
  Matrix out(rows_, cols.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = (*this)(r, cols[c]);
  }
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels[r]);
  out.feature_names = feature_names;
  out.class_names = class_names;
  return out;
}

Dataset Dataset::select_columns(std::span<const std::size_t> cols) const {
  Dataset out;
  out.features = features.select_columns(cols);
  out.labels = labels;
  out.feature_names.reserve(cols.size());
  for (std::size_t c : cols) out.feature_names.push_back(feature_names.at(c));
  out.class_names = class_names;
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (Label y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

void Dataset::validate() const {
  if (labels.size() != features.rows()) {
    throw Error(ErrorKind::kUsage, "Dataset: label count differs from row count");
  }
  if (feature_names.size() != features.cols()) {
    throw Error(ErrorKind::kUsage, "Dataset: feature name count differs from width");
  }
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_names.size()) {
      throw Error(ErrorKind::kUsage,
                  "Dataset: label " + std::to_string(y) + " outside class range");
    }
  }
}

}  // namespace evofs
