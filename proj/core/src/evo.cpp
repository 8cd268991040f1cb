#include "evofs/evo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "evofs/error.hpp"
#include "evofs/parallel.hpp"

namespace evofs::evo {

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorKind::kConfig, what);
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

// Random nonempty subset of [0, dims), size uniform in {1..dims}.
std::vector<std::size_t> random_subset(std::size_t dims, Rng& rng) {
  std::vector<std::size_t> all(dims);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::size_t count = 1 + static_cast<std::size_t>(rng.below(dims));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(dims - i));
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  return all;
}

double squared_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace

Bounds::Bounds(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty()) config_error("bounds: dims must be at least 1");
  if (lo_.size() != hi_.size()) config_error("bounds: lo and hi differ in length");
  for (std::size_t j = 0; j < lo_.size(); ++j) {
    if (!(lo_[j] < hi_[j]) || !std::isfinite(lo_[j]) || !std::isfinite(hi_[j])) {
      config_error("bounds: need finite lo < hi in dimension " + std::to_string(j));
    }
  }
}

Bounds Bounds::uniform(std::size_t dims, double lo, double hi) {
  return Bounds(Vector(dims, lo), Vector(dims, hi));
}

void Bounds::clamp(std::span<double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = std::clamp(x[j], lo_[j], hi_[j]);
  }
}

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != dims()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lo_[j] && x[j] <= hi_[j])) return false;
  }
  return true;
}

std::size_t EvoConfig::effective_k() const noexcept {
  if (k_neighbors != 0) return k_neighbors;
  const auto root = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(n_particles))));
  const std::size_t k = std::max<std::size_t>(2, root);
  return n_particles > 1 ? std::min(k, n_particles - 1) : k;
}

void EvoConfig::validate() const {
  if (n_particles < 2) config_error("n_particles: must be at least 2");
  if (max_fes < n_particles) {
    config_error("max_fes: budget " + std::to_string(max_fes) +
                 " is smaller than n_particles " + std::to_string(n_particles));
  }
  const std::size_t k = effective_k();
  if (k < 1 || k >= n_particles) {
    config_error("k_neighbors: must satisfy 1 <= k < n_particles");
  }
  if (!(stable_step_scale > 0.0 && stable_step_scale <= 1.0)) {
    config_error("stable_step_scale: must lie in (0, 1]");
  }
}

double Evaluator::operator()(std::span<const double> x) {
  ++calls_;
  double v = objective_(x);
  if (!std::isfinite(v)) {
    ++nonfinite_;
    v = std::numeric_limits<double>::infinity();
  }
  return v;
}

std::vector<double> Evaluator::evaluate_all(const std::vector<Vector>& positions,
                                            std::size_t threads) {
  std::vector<double> out(positions.size());
  parallel_for(positions.size(), threads,
               [&](std::size_t i) { out[i] = objective_(positions[i]); });
  calls_ += positions.size();
  for (double& v : out) {
    if (!std::isfinite(v)) {
      ++nonfinite_;
      v = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

Population initialize_population(const EvoConfig& config, const Bounds& bounds,
                                 Evaluator& evaluator) {
  config.validate();
  std::vector<Vector> positions(config.n_particles, Vector(bounds.dims()));
  for (std::size_t i = 0; i < config.n_particles; ++i) {
    Rng rng(derive_seed(config.seed, {0, i}));
    for (std::size_t j = 0; j < bounds.dims(); ++j) {
      positions[i][j] = rng.uniform(bounds.lo()[j], bounds.hi()[j]);
    }
  }
  const std::vector<double> nels = evaluator.evaluate_all(positions, config.threads);
  Population population(config.n_particles);
  for (std::size_t i = 0; i < config.n_particles; ++i) {
    population[i] = Particle{std::move(positions[i]), nels[i]};
  }
  return population;
}

PopulationStats population_statistics(const Population& population) {
  if (population.empty()) {
    throw Error(ErrorKind::kUsage, "population_statistics: empty population");
  }
  const std::size_t dims = population.front().position.size();
  PopulationStats stats;
  stats.x_cp.assign(dims, 0.0);
  stats.best_nel = population.front().nel;
  stats.worst_nel = population.front().nel;
  double nel_sum = 0.0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const Particle& p = population[i];
    for (std::size_t j = 0; j < dims; ++j) stats.x_cp[j] += p.position[j];
    nel_sum += p.nel;
    if (p.nel < stats.best_nel) {
      stats.best_nel = p.nel;
      stats.best_index = i;
    }
    stats.worst_nel = std::max(stats.worst_nel, p.nel);
  }
  const auto n = static_cast<double>(population.size());
  for (double& c : stats.x_cp) c /= n;
  stats.eb = nel_sum / n;
  return stats;
}

double stability_level(double nel, const PopulationStats& stats) noexcept {
  const double span = stats.worst_nel - stats.best_nel;
  if (!(span > 0.0)) return 0.0;
  double sl = (nel - stats.best_nel) / span;
  // inf/inf when the worst particle is non-finite
  if (std::isnan(sl)) sl = nel > stats.best_nel ? 1.0 : 0.0;
  return std::clamp(sl, 0.0, 1.0);
}

Neighborhood neighborhood(const Population& population, std::size_t i,
                          std::size_t k) {
  if (i >= population.size()) {
    throw Error(ErrorKind::kUsage, "neighborhood: particle index out of range");
  }
  if (k == 0 || k >= population.size()) {
    throw Error(ErrorKind::kUsage,
                "neighborhood: k must satisfy 1 <= k < population size");
  }
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(population.size() - 1);
  for (std::size_t m = 0; m < population.size(); ++m) {
    if (m == i) continue;
    order.emplace_back(squared_distance(population[i].position, population[m].position), m);
  }
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end());

  Neighborhood hood;
  hood.indices.reserve(k);
  hood.x_ng.assign(population[i].position.size(), 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t m = order[r].second;
    hood.indices.push_back(m);
    for (std::size_t j = 0; j < hood.x_ng.size(); ++j) {
      hood.x_ng[j] += population[m].position[j];
    }
  }
  for (double& c : hood.x_ng) c /= static_cast<double>(k);
  return hood;
}

Vector copy_dimensions(std::span<const double> x, std::span<const double> source,
                       std::span<const std::size_t> dims) {
  Vector out(x.begin(), x.end());
  for (std::size_t j : dims) out[j] = source[j];
  return out;
}

Vector beta_decay_toward_center(std::span<const double> x,
                                std::span<const double> best,
                                std::span<const double> center,
                                std::span<const double> tau1,
                                std::span<const double> tau2, double sl) {
  const double denom = std::max(sl, kStabilityEpsilon);
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = x[j] + (tau1[j] * best[j] - tau2[j] * center[j]) / denom;
  }
  return out;
}

Vector beta_decay_toward_neighbors(std::span<const double> x,
                                   std::span<const double> best,
                                   std::span<const double> neighbors,
                                   std::span<const double> tau3,
                                   std::span<const double> tau4) {
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = x[j] + (tau3[j] * best[j] - tau4[j] * neighbors[j]);
  }
  return out;
}

std::vector<Vector> generate_candidates(const Population& population,
                                        std::size_t i,
                                        const PopulationStats& stats,
                                        const Neighborhood& hood,
                                        const Bounds& bounds,
                                        double stable_step_scale, Rng& rng) {
  const Particle& particle = population[i];
  const Vector& best = population[stats.best_index].position;
  const std::size_t dims = particle.position.size();

  std::vector<Vector> out;
  if (particle.nel > stats.eb) {
    const double sl = stability_level(particle.nel, stats);
    const double stability_bound = rng.uniform();
    if (sl > stability_bound) {
      const auto alpha_dims = random_subset(dims, rng);
      out.push_back(copy_dimensions(particle.position, best, alpha_dims));
      const auto gamma_dims = random_subset(dims, rng);
      out.push_back(copy_dimensions(particle.position, hood.x_ng, gamma_dims));
    } else {
      const Vector tau1 = random_vector(dims, rng);
      const Vector tau2 = random_vector(dims, rng);
      out.push_back(beta_decay_toward_center(particle.position, best, stats.x_cp,
                                             tau1, tau2, sl));
      const Vector tau3 = random_vector(dims, rng);
      const Vector tau4 = random_vector(dims, rng);
      out.push_back(beta_decay_toward_neighbors(particle.position, best,
                                                hood.x_ng, tau3, tau4));
    }
  } else {
    Vector walk = particle.position;
    for (std::size_t j = 0; j < dims; ++j) {
      const double width = bounds.hi()[j] - bounds.lo()[j];
      walk[j] += rng.uniform() * width * stable_step_scale * rng.sign();
    }
    out.push_back(std::move(walk));
  }
  for (Vector& c : out) bounds.clamp(c);
  return out;
}

Population merge_truncate(Population old_population, Population fresh,
                          std::size_t n) {
  Population merged = std::move(old_population);
  merged.reserve(merged.size() + fresh.size());
  for (Particle& p : fresh) merged.push_back(std::move(p));
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Particle& a, const Particle& b) { return a.nel < b.nel; });
  if (merged.size() > n) merged.resize(n);
  return merged;
}

OptResult optimize(const Objective& objective, const Bounds& bounds,
                   const EvoConfig& config) {
  config.validate();
  Evaluator evaluator(objective);
  Population population = initialize_population(config, bounds, evaluator);
  const std::size_t k = config.effective_k();

  OptResult result;
  {
    const PopulationStats stats = population_statistics(population);
    result.best_position = population[stats.best_index].position;
    result.best_nel = stats.best_nel;
    result.history.push_back(result.best_nel);
  }

  for (std::uint64_t generation = 1; evaluator.calls() < config.max_fes; ++generation) {
    const PopulationStats stats = population_statistics(population);
    std::vector<Vector> candidates;
    for (std::size_t i = 0; i < population.size(); ++i) {
      Rng rng(derive_seed(config.seed, {generation, i}));
      const Neighborhood hood = neighborhood(population, i, k);
      for (Vector& c : generate_candidates(population, i, stats, hood, bounds,
                                           config.stable_step_scale, rng)) {
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t remaining = config.max_fes - evaluator.calls();
    if (candidates.size() > remaining) candidates.resize(remaining);

    const std::vector<double> nels = evaluator.evaluate_all(candidates, config.threads);
    Population fresh(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      fresh[c] = Particle{std::move(candidates[c]), nels[c]};
    }
    population = merge_truncate(std::move(population), std::move(fresh),
                                config.n_particles);
    if (population.front().nel < result.best_nel) {
      result.best_nel = population.front().nel;
      result.best_position = population.front().position;
    }
    result.history.push_back(result.best_nel);
  }

  result.evaluations_used = evaluator.calls();
  result.nonfinite_evaluations = evaluator.nonfinite();
  return result;
}

}  // namespace evofs::evo
