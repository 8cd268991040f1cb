#pragma once

// Energy Valley Optimizer: a population metaheuristic that minimizes an
// objective over a box. Each particle carries a fitness ("neutron enrichment
// level", NEL). Particles above the population's mean fitness (the energy
// barrier) are unstable and emit alpha/gamma or beta decay candidates; stable
// particles take a bounded random walk. Candidates and the old population are
// merged and truncated back to size, so the best fitness never regresses.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "evofs/rng.hpp"

namespace evofs::evo {

using Vector = std::vector<double>;
using Objective = std::function<double(std::span<const double>)>;

class Bounds {
 public:
  // Throws Error(kConfig) unless lo.size() == hi.size() >= 1 and lo < hi.
  Bounds(Vector lo, Vector hi);

  static Bounds uniform(std::size_t dims, double lo, double hi);

  std::size_t dims() const noexcept { return lo_.size(); }
  const Vector& lo() const noexcept { return lo_; }
  const Vector& hi() const noexcept { return hi_; }

  void clamp(std::span<double> x) const;
  bool contains(std::span<const double> x) const;

 private:
  Vector lo_;
  Vector hi_;
};

struct Particle {
  Vector position;
  double nel = 0.0;
};

using Population = std::vector<Particle>;

struct EvoConfig {
  std::size_t n_particles = 30;
  std::size_t max_fes = 1000;
  // 0 selects max(2, ceil(sqrt(n_particles))), capped at n_particles - 1.
  std::size_t k_neighbors = 0;
  std::uint64_t seed = 0;
  double stable_step_scale = 0.1;
  // Worker threads for candidate evaluation; results do not depend on it.
  std::size_t threads = 1;

  std::size_t effective_k() const noexcept;
  // Throws Error(kConfig) naming the offending field.
  void validate() const;
};

struct PopulationStats {
  Vector x_cp;  // centroid
  double eb = 0.0;  // energy barrier: mean NEL
  std::size_t best_index = 0;
  double best_nel = 0.0;
  double worst_nel = 0.0;
};

struct Neighborhood {
  std::vector<std::size_t> indices;  // nearest first
  Vector x_ng;  // centroid of the neighbors
};

struct OptResult {
  Vector best_position;
  double best_nel = 0.0;
  std::vector<double> history;  // best NEL after init, then per generation
  std::size_t evaluations_used = 0;
  std::size_t nonfinite_evaluations = 0;
};

// Counts objective calls and replaces non-finite values with +inf.
class Evaluator {
 public:
  explicit Evaluator(Objective objective) : objective_(std::move(objective)) {}

  double operator()(std::span<const double> x);

  std::size_t calls() const noexcept { return calls_; }
  std::size_t nonfinite() const noexcept { return nonfinite_; }

  // Evaluates every position; may fan out across threads.
  std::vector<double> evaluate_all(const std::vector<Vector>& positions,
                                   std::size_t threads);

 private:
  Objective objective_;
  std::size_t calls_ = 0;
  std::size_t nonfinite_ = 0;
};

Population initialize_population(const EvoConfig& config, const Bounds& bounds,
                                 Evaluator& evaluator);

PopulationStats population_statistics(const Population& population);

// Min-max normalized fitness in [0, 1]; 0 when the population is flat.
double stability_level(double nel, const PopulationStats& stats) noexcept;

Neighborhood neighborhood(const Population& population, std::size_t i,
                          std::size_t k);

// The individual decay moves. They do not clamp.

// Alpha (from the best) and gamma (from the neighborhood centroid) decay:
// copy the listed dimensions of `source` into a copy of `x`.
Vector copy_dimensions(std::span<const double> x, std::span<const double> source,
                       std::span<const std::size_t> dims);

// x + (tau1 * best - tau2 * center) / max(sl, 1e-9)
Vector beta_decay_toward_center(std::span<const double> x,
                                std::span<const double> best,
                                std::span<const double> center,
                                std::span<const double> tau1,
                                std::span<const double> tau2, double sl);

// x + (tau3 * best - tau4 * neighbors)
Vector beta_decay_toward_neighbors(std::span<const double> x,
                                   std::span<const double> best,
                                   std::span<const double> neighbors,
                                   std::span<const double> tau3,
                                   std::span<const double> tau4);

inline constexpr double kStabilityEpsilon = 1e-9;

// Candidate positions for particle i (already clamped into bounds).
std::vector<Vector> generate_candidates(const Population& population,
                                        std::size_t i,
                                        const PopulationStats& stats,
                                        const Neighborhood& hood,
                                        const Bounds& bounds,
                                        double stable_step_scale, Rng& rng);

// Stable sort of old ++ fresh by NEL, truncated to n. Old particles win ties.
Population merge_truncate(Population old_population, Population fresh,
                          std::size_t n);

OptResult optimize(const Objective& objective, const Bounds& bounds,
                   const EvoConfig& config);

}  // namespace evofs::evo
