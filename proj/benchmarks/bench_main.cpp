#include <benchmark/benchmark.h>

#include <random>

#include "evofs/bench.hpp"
#include "evofs/classifiers.hpp"
#include "evofs/evo.hpp"
#include "evofs/feature_select.hpp"
#include "support.hpp"

namespace {

using namespace evofs;

void BM_EvoSphere(benchmark::State& state) {
  const auto dims = static_cast<std::size_t>(state.range(0));
  const auto f = bench::TestFunction::kSphere;
  evo::EvoConfig c;
  c.max_fes = 5000;
  for (auto _ : state) {
    const auto r = evo::optimize(bench::objective_for(f), bench::default_bounds(f, dims), c);
    benchmark::DoNotOptimize(r.best_nel);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.max_fes));
}
BENCHMARK(BM_EvoSphere)->Arg(2)->Arg(10)->Arg(30);

void BM_CartTrain(benchmark::State& state) {
  const auto d = testing::planted_rule_dataset(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    auto m = ml::train(ml::CartSpec{}, d, 1);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_CartTrain)->Arg(500)->Arg(2000);

void BM_KnnPredict(benchmark::State& state) {
  const auto d = testing::planted_rule_dataset(static_cast<std::size_t>(state.range(0)), 4);
  const auto m = ml::train(ml::KnnSpec{5}, d, 1);
  for (auto _ : state) {
    auto p = m.predict(d.features);
    benchmark::DoNotOptimize(p);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnPredict)->Arg(500)->Arg(2000);

void BM_SelectFeatures(benchmark::State& state) {
  const auto d = testing::planted_rule_dataset(400, 5);
  evo::EvoConfig c;
  c.max_fes = 300;
  for (auto _ : state) {
    const auto r = fs::select_features(d, ml::CartSpec{}, fs::CostWeights{}, c);
    benchmark::DoNotOptimize(r.cost);
  }
}
BENCHMARK(BM_SelectFeatures)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
