#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "evofs/error.hpp"
#include "evofs/metrics.hpp"

namespace evofs::metrics {
namespace {

ConfusionMatrix binary(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  // Class 1 is the positive class.
  ConfusionMatrix cm(2);
  cm.at(1, 1) = tp;
  cm.at(0, 0) = tn;
  cm.at(0, 1) = fp;
  cm.at(1, 0) = fn;
  return cm;
}

TEST(ConfusionMatrix, PerfectPrediction) {
  const std::vector<Label> y{0, 1};
  const auto cm = confusion_matrix(y, y, 2);
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(1, 1), 1u);
  EXPECT_EQ(cm.at(0, 1), 0u);
  EXPECT_EQ(cm.at(1, 0), 0u);
}

TEST(ConfusionMatrix, TotalConfusion) {
  const std::vector<Label> t{0, 0}, p{1, 1};
  const auto cm = confusion_matrix(t, p, 2);
  EXPECT_EQ(cm.at(0, 1), 2u);
  EXPECT_EQ(cm.total(), 2u);
  EXPECT_EQ(cm.trace(), 0u);
}

TEST(ConfusionMatrix, EmptyInputGivesZeros) {
  const auto cm = confusion_matrix({}, {}, 3);
  EXPECT_EQ(cm.n_classes(), 3u);
  EXPECT_EQ(cm.total(), 0u);
}

TEST(ConfusionMatrix, InvalidInputIsUsageError) {
  const std::vector<Label> a{0, 1}, b{0}, c{0, 2};
  try {
    confusion_matrix(a, b, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  EXPECT_THROW(confusion_matrix(a, c, 2), Error);
  const std::vector<Label> neg{-1};
  EXPECT_THROW(confusion_matrix(neg, neg, 2), Error);
}

TEST(ConfusionMatrix, JsonAndCsv) {
  const auto cm = binary(3, 4, 1, 2);
  EXPECT_EQ(ConfusionMatrix::from_json(cm.to_json()), cm);
  const std::vector<std::string> names{"BENIGN", "DDoS"};
  EXPECT_EQ(cm.to_csv(names), "true\\predicted,BENIGN,DDoS\nBENIGN,4,1\nDDoS,2,3\n");
}

TEST(Scores, HandBuiltBinary) {
  const auto m = scores(binary(50, 40, 5, 5));
  EXPECT_NEAR(m.accuracy, 0.9, 1e-12);
  const auto& pos = m.per_class[1];
  EXPECT_NEAR(pos.precision, 10.0 / 11.0, 1e-12);
  EXPECT_NEAR(pos.recall, 10.0 / 11.0, 1e-12);
  EXPECT_NEAR(pos.f1, 10.0 / 11.0, 1e-12);
  EXPECT_EQ(pos.tp, 50u);
  EXPECT_EQ(pos.tn, 40u);
  EXPECT_EQ(pos.fp, 5u);
  EXPECT_EQ(pos.fn, 5u);
}

TEST(Scores, PaperTripleHarmonicMean) {
  EXPECT_NEAR(harmonic_mean(0.9895, 0.98941), 0.98945, 5e-5);
}

TEST(Scores, PerfectThreeClass) {
  ConfusionMatrix cm(3);
  cm.at(0, 0) = 4;
  cm.at(1, 1) = 7;
  cm.at(2, 2) = 1;
  const auto m = scores(cm);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.fpr, 0.0);
  EXPECT_DOUBLE_EQ(m.fnr, 0.0);
}

TEST(Scores, ZeroTotalIsMetricsError) {
  try {
    scores(ConfusionMatrix(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMetrics);
  }
}

TEST(Scores, NeverPredictedClassHasZeroPrecision) {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 3;
  cm.at(1, 0) = 2;
  const auto m = scores(cm);
  EXPECT_DOUBLE_EQ(m.per_class[1].precision, 0.0);
  EXPECT_DOUBLE_EQ(m.per_class[1].f1, 0.0);
}

TEST(Scores, MacroIsUnweightedMean) {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 90;
  cm.at(0, 1) = 10;
  cm.at(1, 1) = 5;
  cm.at(1, 0) = 5;
  const auto m = scores(cm);
  EXPECT_NEAR(m.recall, (0.9 + 0.5) / 2.0, 1e-12);
  const auto w = scores(cm, Averaging::kWeighted);
  EXPECT_NEAR(w.recall, (100 * 0.9 + 10 * 0.5) / 110.0, 1e-12);
}

ConfusionMatrix random_matrix(std::mt19937_64& gen) {
  const std::size_t k = 2 + gen() % 5;
  ConfusionMatrix cm(k);
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t p = 0; p < k; ++p) cm.at(t, p) = gen() % 20;
  }
  cm.at(0, 0) += 1;
  return cm;
}

TEST(ScoresProperty, PermutationInvariantAccuracy) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cm = random_matrix(gen);
    std::vector<std::size_t> perm(cm.n_classes());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), gen);
    ConfusionMatrix permuted(cm.n_classes());
    for (std::size_t t = 0; t < cm.n_classes(); ++t) {
      for (std::size_t p = 0; p < cm.n_classes(); ++p) permuted.at(perm[t], perm[p]) = cm.at(t, p);
    }
    EXPECT_DOUBLE_EQ(scores(cm).accuracy, scores(permuted).accuracy);
  }
}

TEST(ScoresProperty, CountIdentities) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cm = random_matrix(gen);
    const auto m = scores(cm);
    std::uint64_t tp_sum = 0;
    for (const auto& c : m.per_class) {
      tp_sum += c.tp;
      EXPECT_EQ(c.tp + c.tn + c.fp + c.fn, cm.total());
    }
    EXPECT_EQ(tp_sum, cm.trace());
    EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
  }
}

TEST(ScoresProperty, HarmonicMeanBounds) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    for (const auto& c : scores(random_matrix(gen)).per_class) {
      if (c.precision > 0.0 && c.recall > 0.0) {
        EXPECT_LE(c.f1, std::max(c.precision, c.recall) + 1e-15);
        EXPECT_GE(c.f1, std::min(c.precision, c.recall) - 1e-15);
        EXPECT_DOUBLE_EQ(c.f1, harmonic_mean(c.precision, c.recall));
      } else {
        EXPECT_EQ(c.f1, 0.0);
      }
    }
  }
}

TEST(ScoresProperty, SelfPredictionIsPerfect) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Label> y(1 + gen() % 50);
    for (auto& v : y) v = static_cast<Label>(gen() % 4);
    EXPECT_DOUBLE_EQ(scores(confusion_matrix(y, y, 4)).accuracy, 1.0);
  }
}

TEST(Metrics, JsonOmitsTimingsOnRequest) {
  auto m = scores(binary(1, 1, 0, 0));
  m.train_time = 1.5;
  EXPECT_TRUE(m.to_json(true).contains("train_time"));
  EXPECT_FALSE(m.to_json(false).contains("train_time"));
  EXPECT_EQ(m.to_json(false).at("averaging"), "macro");
}

}  // namespace
}  // namespace evofs::metrics
