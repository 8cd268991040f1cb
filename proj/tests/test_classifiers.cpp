#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evofs/classifiers.hpp"
#include "evofs/error.hpp"
#include "support.hpp"

namespace evofs::ml {
namespace {

using testing::make_dataset;
using testing::random_dataset;

Dataset xor_corners() {
  // A = 0 at (0,0), (1,1); B = 1 at (0,1), (1,0).
  return make_dataset({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {0, 0, 1, 1}, 2);
}

class MatrixKernel : public KernelSource {
 public:
  explicit MatrixKernel(std::vector<std::vector<double>> k) : k_(std::move(k)) {}
  std::size_t size() const override { return k_.size(); }
  double operator()(std::size_t i, std::size_t j) const override { return k_[i][j]; }

 private:
  std::vector<std::vector<double>> k_;
};

std::vector<std::vector<double>> rbf_gram(const Matrix& x, double gamma) {
  std::vector<std::vector<double>> k(x.rows(), std::vector<double>(x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.rows(); ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double d = x(i, c) - x(j, c);
        d2 += d * d;
      }
      k[i][j] = std::exp(-gamma * d2);
    }
  }
  return k;
}

double training_accuracy(const Model& m, const Dataset& d) {
  const auto pred = m.predict(d.features);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == d.labels[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

// --- KNN --------------------------------------------------------------------------

TEST(Knn, NearestPoint) {
  const auto m = train(KnnSpec{1}, make_dataset({{0}, {10}}, {0, 1}, 2), 0);
  EXPECT_EQ(m.predict_one(std::vector<double>{1.0}), 0);
}

TEST(Knn, MajorityOfEquidistant) {
  const auto d = make_dataset({{1, 0}, {-1, 0}, {0, 1}}, {0, 0, 1}, 2);
  const auto m = train(KnnSpec{3}, d, 0);
  EXPECT_EQ(m.predict_one(std::vector<double>{0, 0}), 0);
}

TEST(Knn, VoteTieGoesToLowestClass) {
  const auto d = make_dataset({{1}, {2}}, {1, 0}, 2);
  EXPECT_EQ(train(KnnSpec{2}, d, 0).predict_one(std::vector<double>{0}), 0);
}

TEST(Knn, DistanceTieGoesToLowerTrainingIndex) {
  const auto d = make_dataset({{1}, {-1}}, {1, 0}, 2);
  EXPECT_EQ(train(KnnSpec{1}, d, 0).predict_one(std::vector<double>{0}), 1);
}

TEST(Knn, KLargerThanTrainingSet) {
  const auto d = make_dataset({{0}, {1}, {2}}, {1, 1, 0}, 2);
  EXPECT_EQ(train(KnnSpec{10}, d, 0).predict_one(std::vector<double>{2}), 1);
}

TEST(KnnProperty, KOneFitsDistinctPoints) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
    for (int i = 0; i < 40; ++i) {
      rows.push_back({u(gen), u(gen), u(gen)});
      labels.push_back(static_cast<Label>(gen() % 3));
    }
    const auto d = make_dataset(rows, labels, 3);
    EXPECT_EQ(training_accuracy(train(KnnSpec{1}, d, 0), d), 1.0);
  }
}

// --- CART -------------------------------------------------------------------------

TEST(Cart, SingleThresholdSeparates) {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({static_cast<double>(i)});
    labels.push_back(i < 5 ? 0 : 1);
  }
  const auto d = make_dataset(rows, labels, 2);
  CartSpec spec;
  spec.max_depth = 1;
  const auto m = train(spec, d, 0);
  EXPECT_EQ(training_accuracy(m, d), 1.0);
  const auto& root = std::get<CartModel>(m.state()).tree.nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_DOUBLE_EQ(root.threshold, 4.5);
}

TEST(Cart, DepthZeroIsMajorityLeaf) {
  const auto d = make_dataset({{0}, {1}, {2}}, {0, 0, 1}, 2);
  CartSpec spec;
  spec.max_depth = 0;
  const auto m = train(spec, d, 0);
  for (Label p : m.predict(d.features)) EXPECT_EQ(p, 0);
  EXPECT_EQ(std::get<CartModel>(m.state()).tree.nodes().size(), 1u);
}

TEST(Cart, MinSamplesLeafRespected) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_dataset(gen, 4, 60);
    CartSpec spec;
    spec.min_samples_leaf = 3;
    const auto m = train(spec, d, 0);
    for (const auto& n : std::get<CartModel>(m.state()).tree.nodes()) {
      if (n.is_leaf() && d.rows() >= 3) EXPECT_GE(n.samples, 3u);
    }
  }
}

TEST(CartProperty, WeightedImpurityNeverIncreases) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_dataset(gen, 5, 80, 4);
    const auto m = train(CartSpec{}, d, 0);
    const auto& nodes = std::get<CartModel>(m.state()).tree.nodes();
    for (const auto& n : nodes) {
      if (n.is_leaf()) continue;
      const auto& l = nodes[static_cast<std::size_t>(n.left)];
      const auto& r = nodes[static_cast<std::size_t>(n.right)];
      EXPECT_EQ(l.samples + r.samples, n.samples);
      const double parent = static_cast<double>(n.samples) * n.gini;
      EXPECT_LE(static_cast<double>(l.samples) * l.gini, parent + 1e-9);
      EXPECT_LE(static_cast<double>(r.samples) * r.gini, parent + 1e-9);
      EXPECT_LE(static_cast<double>(l.samples) * l.gini + static_cast<double>(r.samples) * r.gini,
                parent + 1e-9);
    }
  }
}

TEST(CartProperty, FitsDistinctPointsExactly) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
    for (int i = 0; i < 50; ++i) {
      rows.push_back({u(gen), u(gen)});
      labels.push_back(static_cast<Label>(gen() % 3));
    }
    const auto d = make_dataset(rows, labels, 3);
    EXPECT_EQ(training_accuracy(train(CartSpec{}, d, 0), d), 1.0);
  }
}

// --- Random forest ----------------------------------------------------------------------

TEST(ForestProperty, SingleFullTreeEqualsCart) {
  std::mt19937_64 gen(200);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_dataset(gen, 6, 100);
    ForestSpec f;
    f.n_trees = 1;
    f.bootstrap = false;
    f.feature_subsample = d.cols();
    const auto rf = train(f, d, gen());
    const auto cart = train(CartSpec{}, d, gen());
    EXPECT_EQ(rf.predict(d.features), cart.predict(d.features));
    std::mt19937_64 q(trial);
    Matrix probe(20, d.cols());
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t c = 0; c < d.cols(); ++c) probe(i, c) = static_cast<double>(q() % 12) / 10.0 - 0.1;
    }
    EXPECT_EQ(rf.predict(probe), cart.predict(probe));
  }
}

TEST(Forest, DeterministicAndThreadIndependent) {
  std::mt19937_64 gen(3);
  const auto d = random_dataset(gen, 5, 80);
  ForestSpec f;
  f.n_trees = 15;
  const auto a = train(f, d, 9);
  f.threads = 3;
  const auto b = train(f, d, 9);
  EXPECT_EQ(a.to_json().at("state"), b.to_json().at("state"));
}

TEST(Forest, VoteTieGoesToLowestClass) {
  const std::vector<std::size_t> votes{2, 3, 3};
  EXPECT_EQ(majority(votes), 1);
}

// --- SVM --------------------------------------------------------------------------------

TEST(Svm, XorCornersMatchBruteForceDual) {
  const auto d = xor_corners();
  const auto gram = rbf_gram(d.features, 1.0);
  // The binary machine scores class 1, so B is +1.
  const std::vector<double> y{-1, -1, 1, 1};
  const double c = 10.0;
  const auto oracle = testing::brute_force_dual(gram, y, c);

  const auto sol = solve_svm_dual(MatrixKernel(gram), y, c, 1e-6, 100000);
  ASSERT_EQ(sol.alpha.size(), 4u);
  EXPECT_TRUE(sol.converged);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GE(sol.alpha[i], 0.0);
    EXPECT_LE(sol.alpha[i], c);
    EXPECT_NEAR(sol.alpha[i], oracle.alpha[i], 0.01) << i;
  }
  const double w = dual_objective(MatrixKernel(gram), y, sol.alpha);
  EXPECT_GE(w, oracle.objective - 1e-9);
  EXPECT_NEAR(w, oracle.objective, 1e-3);

  SvmSpec spec;
  spec.c = c;
  spec.gamma = 1.0;
  const auto m = train(spec, d, 0);
  EXPECT_EQ(training_accuracy(m, d), 1.0);
  for (double a : std::get<SvmModel>(m.state()).machines.at(0).alpha) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, c);
  }
}

TEST(Svm, DualObjectiveOracleValue) {
  // Symmetric optimum: every alpha equals 1 / (1 - e^-1)^2.
  const auto gram = rbf_gram(xor_corners().features, 1.0);
  const std::vector<double> y{-1, -1, 1, 1};
  const auto sol = solve_svm_dual(MatrixKernel(gram), y, 10.0, 1e-8, 100000);
  const double expected = 1.0 / std::pow(1.0 - std::exp(-1.0), 2);
  for (double a : sol.alpha) EXPECT_NEAR(a, expected, 1e-3);
}

TEST(SvmProperty, BoxConstraintsAndEquality) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = random_dataset(gen, 4, 40, 2);
    if (d.class_counts()[0] == 0 || d.class_counts()[1] == 0) continue;
    std::vector<double> y;
    for (Label l : d.labels) y.push_back(l == 1 ? 1.0 : -1.0);
    const double c = 0.1 + static_cast<double>(gen() % 50) / 10.0;
    const auto sol = solve_svm_dual(MatrixKernel(rbf_gram(d.features, 0.5)), y, c, 1e-3,
                                    10 * d.rows());
    double balance = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_GE(sol.alpha[i], 0.0);
      EXPECT_LE(sol.alpha[i], c);
      balance += sol.alpha[i] * y[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-9);
  }
}

TEST(Svm, MulticlassOneVsRest) {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 8; ++i) {
      rows.push_back({c * 3.0 + 0.1 * i, 0.05 * i});
      labels.push_back(c);
    }
  }
  const auto d = make_dataset(rows, labels, 3);
  SvmSpec spec;
  spec.c = 10.0;
  const auto m = train(spec, d, 0);
  EXPECT_EQ(std::get<SvmModel>(m.state()).machines.size(), 3u);
  EXPECT_EQ(training_accuracy(m, d), 1.0);
}

TEST(Svm, SinglePresentClassIsConstant) {
  const auto d = make_dataset({{0}, {1}}, {1, 1}, 2);
  const auto m = train(SvmSpec{}, d, 0);
  EXPECT_EQ(m.predict_one(std::vector<double>{5}), 1);
}

// --- shared contract ------------------------------------------------------------------

TEST(Model, JsonRoundTripPredictsIdentically) {
  std::mt19937_64 gen(8);
  const auto d = random_dataset(gen, 4, 60);
  ForestSpec f;
  f.n_trees = 5;
  CartSpec cart;
  cart.max_depth = 3;
  for (const ClassifierSpec& spec :
       std::vector<ClassifierSpec>{KnnSpec{3}, cart, f, SvmSpec{}}) {
    const auto m = train(spec, d, 1);
    const auto back = Model::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_EQ(back.predict(d.features), m.predict(d.features)) << display_name(spec);
    EXPECT_EQ(back.algorithm(), m.algorithm());
  }
}

TEST(Model, WidthMismatchIsUsageError) {
  const auto m = train(KnnSpec{1}, make_dataset({{0, 0}, {1, 1}}, {0, 1}, 2), 0);
  try {
    m.predict(Matrix(1, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

TEST(Model, EmptyTrainingSetRejected) {
  EXPECT_THROW(train(CartSpec{}, make_dataset({}, {}, 2), 0), Error);
}

TEST(Model, DeterministicAcrossRuns) {
  std::mt19937_64 gen(10);
  const auto d = random_dataset(gen, 5, 70);
  for (const ClassifierSpec& spec :
       std::vector<ClassifierSpec>{KnnSpec{}, CartSpec{}, ForestSpec{}, SvmSpec{}}) {
    EXPECT_EQ(train(spec, d, 4).to_json().at("state"), train(spec, d, 4).to_json().at("state"));
  }
}

TEST(Spec, JsonRoundTripAndValidation) {
  const auto spec = spec_from_json({{"type", "rf"}, {"n_trees", 7}, {"bootstrap", false}});
  EXPECT_EQ(display_name(spec), "RF");
  EXPECT_EQ(std::get<ForestSpec>(spec).n_trees, 7u);
  EXPECT_EQ(to_json(spec_from_json(to_json(spec))), to_json(spec));
  EXPECT_EQ(display_name(spec_from_json({{"type", "dtree"}})), "D_Tree");
  EXPECT_THROW(spec_from_json({{"type", "knn"}, {"k", 0}}), Error);
  EXPECT_THROW(spec_from_json({{"type", "mlp"}}), Error);
  EXPECT_THROW(validate(SvmSpec{-1.0}), Error);
}

}  // namespace
}  // namespace evofs::ml
