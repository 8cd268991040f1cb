#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "evofs/bench.hpp"
#include "evofs/error.hpp"

namespace evofs::bench {
namespace {

TEST(TestFunctions, KnownMinima) {
  const std::vector<double> zero(7, 0.0), ones(5, 1.0);
  EXPECT_EQ(rastrigin(zero), 0.0);
  EXPECT_EQ(sphere(zero), 0.0);
  EXPECT_EQ(rosenbrock(ones), 0.0);
}

TEST(TestFunctions, SpotValues) {
  const std::vector<double> x{1.0, 2.0};
  EXPECT_DOUBLE_EQ(sphere(x), 5.0);
  // 20 + (1 - 10 cos 2pi) + (4 - 10 cos 4pi)
  EXPECT_NEAR(rastrigin(x), 5.0, 1e-12);
  // 100 (2 - 1)^2 + (1 - 1)^2
  EXPECT_DOUBLE_EQ(rosenbrock(x), 100.0);
}

TEST(ParseFunction, UnknownNameIsUsageError) {
  EXPECT_EQ(parse_function("rastrigin"), TestFunction::kRastrigin);
  try {
    parse_function("ackley");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

TEST(DefaultBounds, Boxes) {
  EXPECT_EQ(default_bounds(TestFunction::kSphere, 3).hi()[0], 5.0);
  EXPECT_EQ(default_bounds(TestFunction::kRastrigin, 3).lo()[2], -5.12);
  EXPECT_EQ(default_bounds(TestFunction::kRosenbrock, 1).hi()[0], 2.048);
}

TEST(RunBench, Sphere10DMedianBelowThreshold) {
  evo::EvoConfig c;
  c.n_particles = 30;
  c.max_fes = 5000;
  c.seed = 1;
  const auto rec = run_bench(TestFunction::kSphere, 10, c, 10);
  EXPECT_LT(rec.median_best(), 1e-3);
  ASSERT_EQ(rec.seeds.size(), 10u);
  EXPECT_EQ(rec.seeds[3], 4u);
}

TEST(RunBench, Sphere1DSmallBudget) {
  // A tighter stable-particle walk suits a 200-evaluation, single-dimension run.
  evo::EvoConfig c;
  c.n_particles = 10;
  c.max_fes = 200;
  c.stable_step_scale = 0.02;
  c.seed = 100;
  const auto rec = run_bench(TestFunction::kSphere, 1, c, 10);
  int passed = 0;
  for (const auto& r : rec.runs) passed += r.best_nel < 1e-4 ? 1 : 0;
  EXPECT_GE(passed, 9);
}

TEST(RunBench, HistoryCsvAndSummary) {
  evo::EvoConfig c;
  c.n_particles = 5;
  c.max_fes = 20;
  c.seed = 3;
  const auto rec = run_bench(TestFunction::kRastrigin, 2, c, 2);
  std::istringstream csv(rec.history_csv());
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "run,seed,iteration,best_nel");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, rec.runs[0].history.size() + rec.runs[1].history.size());
  const auto j = rec.summary_json();
  EXPECT_EQ(j.at("function"), "rastrigin");
  EXPECT_EQ(j.at("runs").size(), 2u);
}

TEST(RunBench, ZeroDimsRejected) {
  EXPECT_THROW(run_bench(TestFunction::kSphere, 0, evo::EvoConfig{}, 1), Error);
}

}  // namespace
}  // namespace evofs::bench
