#include <algorithm>
#include <numeric>

#include "evofs/classifiers.hpp"
#include "evofs/error.hpp"

namespace evofs::ml {

namespace {

// n * gini(counts) = n - sum(c^2) / n
double weighted_gini(std::span<const std::size_t> counts, std::size_t n) {
  if (n == 0) return 0.0;
  double sq = 0.0;
  for (std::size_t c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
  return static_cast<double>(n) - sq / static_cast<double>(n);
}

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;  // weighted child impurity
  bool found = false;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const Label> y, std::size_t n_classes,
              const CartSpec& spec, Rng* rng)
      : x_(x), y_(y), n_classes_(n_classes), spec_(spec), rng_(rng) {
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    std::vector<std::size_t> counts(n_classes_, 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y_[r])];

    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    {
      TreeNode& node = nodes_.back();
      node.samples = rows.size();
      node.label = majority(counts);
      node.gini = rows.empty() ? 0.0
                               : weighted_gini(counts, rows.size()) /
                                     static_cast<double>(rows.size());
    }

    const bool pure = counts[static_cast<std::size_t>(nodes_[index].label)] == rows.size();
    const bool depth_reached = spec_.max_depth && depth >= *spec_.max_depth;
    if (pure || depth_reached || rows.size() < spec_.min_samples_split ||
        rows.size() < 2 * spec_.min_samples_leaf) {
      return index;
    }

    const SplitChoice split = best_split(rows, counts);
    if (!split.found) return index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[index].feature = static_cast<std::int32_t>(split.feature);
    nodes_[index].threshold = split.threshold;
    const std::int32_t l = grow(left, depth + 1);
    nodes_[index].left = l;
    const std::int32_t r = grow(right, depth + 1);
    nodes_[index].right = r;
    return index;
  }

  std::span<const std::size_t> candidate_features() {
    const std::size_t d = features_.size();
    if (!spec_.max_features || *spec_.max_features >= d || rng_ == nullptr) {
      std::iota(features_.begin(), features_.end(), std::size_t{0});
      return features_;
    }
    const std::size_t m = std::max<std::size_t>(1, *spec_.max_features);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_->below(d - i));
      std::swap(features_[i], features_[j]);
    }
    std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(m));
    return std::span<const std::size_t>(features_.data(), m);
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& counts) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(1, spec_.min_samples_leaf);
    SplitChoice best;
    std::vector<std::pair<double, std::size_t>> order(n);
    std::vector<std::size_t> left_counts(n_classes_);
    std::vector<std::size_t> right_counts(n_classes_);

    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) order[i] = {x_(rows[i], f), rows[i]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;

      std::fill(left_counts.begin(), left_counts.end(), 0);
      right_counts = counts;
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (std::size_t c : counts) right_sq += static_cast<double>(c) * static_cast<double>(c);

      for (std::size_t i = 1; i < n; ++i) {
        const auto moved = static_cast<std::size_t>(y_[order[i - 1].second]);
        // Incremental sum of squared class counts on each side.
        left_sq += 2.0 * static_cast<double>(left_counts[moved]) + 1.0;
        right_sq -= 2.0 * static_cast<double>(right_counts[moved]) - 1.0;
        ++left_counts[moved];
        --right_counts[moved];

        const double lo = order[i - 1].first;
        const double hi = order[i].first;
        if (!(lo < hi)) continue;
        if (i < min_leaf || n - i < min_leaf) continue;

        const auto nl = static_cast<double>(i);
        const auto nr = static_cast<double>(n - i);
        const double score = (nl - left_sq / nl) + (nr - right_sq / nr);
        if (!best.found || score < best.score) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = SplitChoice{f, mid, score, true};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const Label> y_;
  std::size_t n_classes_;
  const CartSpec& spec_;
  Rng* rng_;
  std::vector<std::size_t> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Label DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
    }
  }
  return deepest;
}

DecisionTree grow_tree(const Matrix& x, std::span<const Label> y,
                       std::span<const std::size_t> rows, std::size_t n_classes,
                       const CartSpec& spec, Rng* rng) {
  if (rows.empty()) throw Error(ErrorKind::kUsage, "grow_tree: no training rows");
  TreeBuilder builder(x, y, n_classes, spec, rng);
  return DecisionTree(builder.build({rows.begin(), rows.end()}));
}

}  // namespace evofs::ml
