#include <algorithm>
#include <utility>

#include "evofs/classifiers.hpp"
#include "evofs/error.hpp"

namespace evofs::ml {

Label majority(std::span<const std::size_t> votes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return static_cast<Label>(best);
}

KnnModel train_knn(const KnnSpec& spec, const Dataset& data) {
  return KnnModel{spec.k, data.features, data.labels};
}

Label knn_predict(const KnnModel& model, std::span<const double> x,
                  std::size_t n_classes) {
  const std::size_t n = model.x.rows();
  const std::size_t k = std::min(model.k, n);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = model.x.row(r);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - x[j];
      s += d * d;
    }
    dist[r] = {s, r};
  }
  // Pairs compare by distance, then training index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> votes(n_classes, 0);
  for (std::size_t i = 0; i < k; ++i) {
    ++votes[static_cast<std::size_t>(model.y[dist[i].second])];
  }
  return majority(votes);
}

}  // namespace evofs::ml
