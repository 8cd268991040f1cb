#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evofs/evo.hpp"

namespace evofs::bench {

enum class TestFunction { kSphere, kRastrigin, kRosenbrock };

// Throws Error(kUsage) for names other than sphere, rastrigin, rosenbrock.
TestFunction parse_function(std::string_view name);
std::string_view to_string(TestFunction f) noexcept;

double sphere(std::span<const double> x) noexcept;
double rastrigin(std::span<const double> x) noexcept;
double rosenbrock(std::span<const double> x) noexcept;

evo::Objective objective_for(TestFunction f);
// Conventional search boxes: sphere [-5, 5], rastrigin [-5.12, 5.12],
// rosenbrock [-2.048, 2.048].
evo::Bounds default_bounds(TestFunction f, std::size_t dims);

struct ConvergenceRecord {
  TestFunction function = TestFunction::kSphere;
  std::size_t dims = 0;
  evo::EvoConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<evo::OptResult> runs;
  double seconds = 0.0;

  double median_best() const;
  // run,seed,iteration,best_nel
  std::string history_csv() const;
  nlohmann::json summary_json() const;
};

// Runs the optimizer once per seed config.seed, config.seed + 1, ...
ConvergenceRecord run_bench(TestFunction f, std::size_t dims, const evo::EvoConfig& config,
                            std::size_t runs = 1);

}  // namespace evofs::bench
