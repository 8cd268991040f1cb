#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "evofs/data.hpp"
#include "evofs/error.hpp"
#include "evofs/rng.hpp"

namespace evofs::data {

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    by_class.at(static_cast<std::size_t>(ds.labels[r])).push_back(r);
  }
  return by_class;
}

}  // namespace

std::vector<std::size_t> balanced_counts(std::span<const std::size_t> counts,
                                         std::optional<std::size_t> cap) {
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  if (cap) {
    if (*cap == 0) throw Error(ErrorKind::kUsage, "downsample: cap must be positive");
    limit = *cap;
  } else {
    for (std::size_t n : counts) {
      if (n > 0) limit = std::min(limit, n);
    }
  }
  std::vector<std::size_t> out;
  out.reserve(counts.size());
  for (std::size_t n : counts) out.push_back(std::min(n, limit));
  return out;
}

Dataset downsample(const Dataset& ds, std::optional<std::size_t> cap,
                   std::uint64_t seed) {
  ds.validate();
  auto by_class = rows_by_class(ds);
  std::vector<std::size_t> counts;
  for (const auto& rows : by_class) counts.push_back(rows.size());
  const auto targets = balanced_counts(counts, cap);

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    Rng rng(derive_seed(seed, {0x646f776eULL, c}));
    const std::size_t take = targets[c];
    // Partial Fisher-Yates: the first `take` slots are a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(rows.size() - i));
      std::swap(rows[i], rows[j]);
    }
    kept.insert(kept.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
  }
  Rng order(derive_seed(seed, {0x73687566ULL}));
  order.shuffle(std::span<std::size_t>(kept));
  return ds.select_rows(kept);
}

SplitPair split(const Dataset& ds, double ratio, std::uint64_t seed) {
  ds.validate();
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorKind::kUsage, "split: ratio must lie in (0, 1)");
  }
  auto by_class = rows_by_class(ds);
  SplitPair out;
  out.ratio = ratio;
  out.seed = seed;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      throw Error(ErrorKind::kStratification,
                  "split: class \"" + ds.class_names[c] + "\" has a single row");
    }
    Rng rng(derive_seed(seed, {0x73706c74ULL, c}));
    rng.shuffle(std::span<std::size_t>(rows));
    auto n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    out.train_rows.insert(out.train_rows.end(), rows.begin(),
                          rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_rows.insert(out.test_rows.end(),
                         rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train = ds.select_rows(out.train_rows);
  out.test = ds.select_rows(out.test_rows);
  return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds,
                                                       std::size_t k,
                                                       std::uint64_t seed) {
  ds.validate();
  if (k < 2) throw Error(ErrorKind::kUsage, "stratified_folds: k must be at least 2");
  auto by_class = rows_by_class(ds);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < k) {
      throw Error(ErrorKind::kStratification,
                  "stratified_folds: class \"" + ds.class_names[c] + "\" has " +
                      std::to_string(rows.size()) + " rows, fewer than " +
                      std::to_string(k) + " folds");
    }
    Rng rng(derive_seed(seed, {0x666f6c64ULL, c}));
    rng.shuffle(std::span<std::size_t>(rows));
    // Rotating the start fold keeps fold sizes balanced across classes.
    for (std::size_t i = 0; i < rows.size(); ++i) {
      folds[(offset + i) % k].push_back(rows[i]);
    }
    offset = (offset + rows.size()) % k;
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

}  // namespace evofs::data
