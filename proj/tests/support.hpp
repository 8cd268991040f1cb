#pragma once

// Synthetic datasets and independent oracles shared by the unit and
// acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "evofs/classifiers.hpp"
#include "evofs/dataset.hpp"
#include "evofs/feature_select.hpp"

namespace evofs::testing {

inline Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                            const std::vector<Label>& labels, std::size_t n_classes) {
  Dataset ds;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  ds.features = Matrix(0, cols);
  for (const auto& r : rows) ds.features.append_row(r);
  ds.labels = labels;
  for (std::size_t j = 0; j < cols; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t c = 0; c < n_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  return ds;
}

// Labels drawn with the given per-class counts; features are noise.
inline Dataset dataset_with_counts(const std::vector<std::size_t>& counts, std::size_t cols,
                                   std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      std::vector<double> r(cols);
      for (auto& v : r) v = u(gen);
      rows.push_back(std::move(r));
      labels.push_back(static_cast<Label>(c));
    }
  }
  return make_dataset(rows, labels, counts.size());
}

// Eight features in [0, 1]; the label is 1 iff x0 + x1 + x2 > 1.5, the other
// five columns are noise.
inline Dataset planted_rule_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(8);
    for (auto& v : r) v = u(gen);
    labels.push_back(r[0] + r[1] + r[2] > 1.5 ? 1 : 0);
    rows.push_back(std::move(r));
  }
  return make_dataset(rows, labels, 2);
}

// Random small classification problem with distinct-ish values.
inline Dataset random_dataset(std::mt19937_64& gen, std::size_t max_d, std::size_t max_n,
                              std::size_t max_classes = 3) {
  std::uniform_int_distribution<std::size_t> dd(1, max_d);
  std::uniform_int_distribution<std::size_t> nn(2, max_n);
  std::uniform_int_distribution<std::size_t> kk(2, max_classes);
  const std::size_t d = dd(gen);
  const std::size_t n = nn(gen);
  const std::size_t k = kk(gen);
  std::uniform_int_distribution<int> level(0, 9);  // coarse grid forces ties
  std::uniform_int_distribution<int> cls(0, static_cast<int>(k) - 1);
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(d);
    for (auto& v : r) v = level(gen) / 10.0;
    rows.push_back(std::move(r));
    labels.push_back(cls(gen));
  }
  return make_dataset(rows, labels, k);
}

struct ExhaustiveBest {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<bool> mask;
};

// Enumerates every nonempty mask of a small dataset.
inline ExhaustiveBest exhaustive_best(const Dataset& train, const ml::ClassifierSpec& spec,
                                      const fs::CostWeights& weights,
                                      const fs::InnerValidation& inner) {
  const std::size_t d = train.cols();
  ExhaustiveBest best;
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << d); ++bits) {
    std::vector<bool> m(d);
    for (std::size_t j = 0; j < d; ++j) m[j] = (bits >> j) & 1U;
    const double c = fs::fs_cost(fs::FeatureMask(m), train, spec, weights, inner).cost;
    if (c < best.cost) best = {c, m};
  }
  return best;
}

// Maximizes a 4-point SVM dual by grid search over alpha_1..alpha_3 with
// alpha_4 fixed by sum(alpha_i y_i) = 0: the whole box [0, c] at a coarse
// step, then a fine grid around the coarse winner.
struct DualGridResult {
  std::vector<double> alpha;
  double objective = -std::numeric_limits<double>::infinity();
};

inline void dual_grid_pass(const std::vector<std::vector<double>>& k, const std::vector<double>& y,
                           double c, const double lo[3], const double hi[3], double step,
                           DualGridResult& best) {
  std::vector<double> a(4);
  for (a[0] = lo[0]; a[0] <= hi[0] + 1e-12; a[0] += step) {
    for (a[1] = lo[1]; a[1] <= hi[1] + 1e-12; a[1] += step) {
      for (a[2] = lo[2]; a[2] <= hi[2] + 1e-12; a[2] += step) {
        a[3] = -(a[0] * y[0] + a[1] * y[1] + a[2] * y[2]) * y[3];
        if (a[3] < 0.0 || a[3] > c) continue;
        double lin = 0.0;
        double quad = 0.0;
        for (int p = 0; p < 4; ++p) {
          lin += a[p];
          for (int q = 0; q < 4; ++q) quad += a[p] * a[q] * y[p] * y[q] * k[p][q];
        }
        const double w = lin - 0.5 * quad;
        if (w > best.objective) best = {a, w};
      }
    }
  }
}

inline DualGridResult brute_force_dual(const std::vector<std::vector<double>>& k,
                                       const std::vector<double>& y, double c) {
  DualGridResult best;
  const double coarse = c / 100.0;
  const double lo0[3] = {0.0, 0.0, 0.0};
  const double hi0[3] = {c, c, c};
  dual_grid_pass(k, y, c, lo0, hi0, coarse, best);
  double lo[3], hi[3];
  for (int i = 0; i < 3; ++i) {
    lo[i] = std::max(0.0, best.alpha[i] - 2 * coarse);
    hi[i] = std::min(c, best.alpha[i] + 2 * coarse);
  }
  dual_grid_pass(k, y, c, lo, hi, coarse / 100.0, best);
  return best;
}

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("evofs-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Flow-like CSV with a planted signal in the first two columns.
inline std::string synthetic_flow_csv(std::size_t rows_per_class, std::uint64_t seed,
                                      const std::vector<std::string>& classes) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::string out = "Flow Duration,Total Fwd Packets,Noise A,Noise B,Noise C,Label\n";
  for (std::size_t i = 0; i < rows_per_class; ++i) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const double base = 6.0 * static_cast<double>(c);
      out += std::to_string(base + noise(gen)) + "," + std::to_string(base * 2 + noise(gen)) +
             "," + std::to_string(u(gen)) + "," + std::to_string(u(gen)) + "," +
             std::to_string(u(gen)) + "," + classes[c] + "\n";
    }
  }
  return out;
}

}  // namespace evofs::testing
