#include <cmath>
#include <numeric>

#include "evofs/classifiers.hpp"
#include "evofs/error.hpp"
#include "evofs/parallel.hpp"

namespace evofs::ml {

ForestModel train_forest(const ForestSpec& spec, const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  CartSpec tree_spec = spec.tree;
  tree_spec.max_features =
      spec.feature_subsample
          ? *spec.feature_subsample
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  ForestModel model;
  model.trees.resize(spec.n_trees);
  parallel_for(spec.n_trees, spec.threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {spec.seed, t}));
    std::vector<std::size_t> rows(n);
    if (spec.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees[t] = grow_tree(data.features, data.labels, rows, data.n_classes(),
                               tree_spec, &rng);
  });
  return model;
}

Label forest_predict(const ForestModel& model, std::span<const double> x,
                     std::size_t n_classes) {
  std::vector<std::size_t> votes(n_classes, 0);
  for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.predict(x))];
  return majority(votes);
}

}  // namespace evofs::ml
