#include "evofs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "evofs/error.hpp"

namespace evofs::bench {

TestFunction parse_function(std::string_view name) {
  if (name == "sphere") return TestFunction::kSphere;
  if (name == "rastrigin") return TestFunction::kRastrigin;
  if (name == "rosenbrock") return TestFunction::kRosenbrock;
  throw Error(ErrorKind::kUsage, "unknown test function '" + std::string(name) +
                                     "' (expected sphere, rastrigin, rosenbrock)");
}

std::string_view to_string(TestFunction f) noexcept {
  switch (f) {
    case TestFunction::kSphere: return "sphere";
    case TestFunction::kRastrigin: return "rastrigin";
    case TestFunction::kRosenbrock: return "rosenbrock";
  }
  return "sphere";
}

double sphere(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rastrigin(std::span<const double> x) noexcept {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

double rosenbrock(std::span<const double> x) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

evo::Objective objective_for(TestFunction f) {
  switch (f) {
    case TestFunction::kSphere: return sphere;
    case TestFunction::kRastrigin: return rastrigin;
    case TestFunction::kRosenbrock: return rosenbrock;
  }
  return sphere;
}

evo::Bounds default_bounds(TestFunction f, std::size_t dims) {
  switch (f) {
    case TestFunction::kSphere: return evo::Bounds::uniform(dims, -5.0, 5.0);
    case TestFunction::kRastrigin: return evo::Bounds::uniform(dims, -5.12, 5.12);
    case TestFunction::kRosenbrock: return evo::Bounds::uniform(dims, -2.048, 2.048);
  }
  return evo::Bounds::uniform(dims, -5.0, 5.0);
}

double ConvergenceRecord::median_best() const {
  if (runs.empty()) return 0.0;
  std::vector<double> finals;
  for (const auto& r : runs) finals.push_back(r.best_nel);
  std::sort(finals.begin(), finals.end());
  const std::size_t n = finals.size();
  return n % 2 ? finals[n / 2] : 0.5 * (finals[n / 2 - 1] + finals[n / 2]);
}

std::string ConvergenceRecord::history_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "run,seed,iteration,best_nel\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t it = 0; it < runs[r].history.size(); ++it) {
      out << r << ',' << seeds[r] << ',' << it << ',' << runs[r].history[it] << '\n';
    }
  }
  return out.str();
}

nlohmann::json ConvergenceRecord::summary_json() const {
  nlohmann::json j;
  j["function"] = std::string(to_string(function));
  j["dims"] = dims;
  j["n_particles"] = config.n_particles;
  j["max_fes"] = config.max_fes;
  j["k_neighbors"] = config.effective_k();
  j["stable_step_scale"] = config.stable_step_scale;
  nlohmann::json run_list = nlohmann::json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    run_list.push_back({{"seed", seeds[r]},
                        {"best_nel", runs[r].best_nel},
                        {"best_position", runs[r].best_position},
                        {"evaluations_used", runs[r].evaluations_used},
                        {"iterations", runs[r].history.size()}});
  }
  j["runs"] = run_list;
  j["median_best_nel"] = median_best();
  j["seconds"] = seconds;
  return j;
}

ConvergenceRecord run_bench(TestFunction f, std::size_t dims, const evo::EvoConfig& config,
                            std::size_t runs) {
  if (dims < 1) throw Error(ErrorKind::kUsage, "bench: dims must be at least 1");
  if (runs < 1) throw Error(ErrorKind::kUsage, "bench: runs must be at least 1");
  ConvergenceRecord record;
  record.function = f;
  record.dims = dims;
  record.config = config;
  const auto objective = objective_for(f);
  const auto bounds = default_bounds(f, dims);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t r = 0; r < runs; ++r) {
    evo::EvoConfig c = config;
    c.seed = config.seed + r;
    record.seeds.push_back(c.seed);
    record.runs.push_back(evo::optimize(objective, bounds, c));
  }
  record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace evofs::bench
