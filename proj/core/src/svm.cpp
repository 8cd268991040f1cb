#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "evofs/classifiers.hpp"
#include "evofs/error.hpp"

namespace evofs::ml {

namespace {

constexpr double kAlphaEps = 1e-12;
// Above this many rows the kernel is evaluated on demand instead of cached.
constexpr std::size_t kDenseKernelLimit = 3000;

class DenseRbfKernel final : public KernelSource {
 public:
  DenseRbfKernel(const Matrix& x, double gamma) : n_(x.rows()), k_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      k_[i * n_ + i] = 1.0;
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double v = rbf_kernel(x.row(i), x.row(j), gamma);
        k_[i * n_ + j] = v;
        k_[j * n_ + i] = v;
      }
    }
  }
  std::size_t size() const override { return n_; }
  double operator()(std::size_t i, std::size_t j) const override { return k_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> k_;
};

class LazyRbfKernel final : public KernelSource {
 public:
  LazyRbfKernel(const Matrix& x, double gamma) : x_(x), gamma_(gamma) {}
  std::size_t size() const override { return x_.rows(); }
  double operator()(std::size_t i, std::size_t j) const override {
    return i == j ? 1.0 : rbf_kernel(x_.row(i), x_.row(j), gamma_);
  }

 private:
  const Matrix& x_;
  double gamma_;
};

class SmoSolver {
 public:
  SmoSolver(const KernelSource& k, std::span<const double> y, double c, double tol)
      : k_(k), y_(y), c_(c), tol_(tol), n_(k.size()), alpha_(n_, 0.0), error_(n_) {
    // f(x) = 0 initially, so E_i = -y_i.
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];
  }

  DualSolution run(std::size_t max_passes) {
    std::size_t changed = 0;
    bool examine_all = true;
    std::size_t passes = 0;
    while ((changed > 0 || examine_all) && passes < max_passes) {
      changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (examine_all || is_free(i)) changed += examine(i);
      }
      ++passes;
      if (examine_all) {
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    DualSolution out;
    out.alpha = alpha_;
    out.bias = bias_;
    out.passes = passes;
    out.converged = !(changed > 0 || examine_all);
    return out;
  }

 private:
  bool is_free(std::size_t i) const { return alpha_[i] > 0.0 && alpha_[i] < c_; }

  std::size_t examine(std::size_t i2) {
    const double r2 = error_[i2] * y_[i2];
    if (!((r2 < -tol_ && alpha_[i2] < c_) || (r2 > tol_ && alpha_[i2] > 0.0))) return 0;

    // Second-choice heuristic: the free multiplier maximizing |E1 - E2|.
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!is_free(i) || i == i2) continue;
      const double gap = std::abs(error_[i] - error_[i2]);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best < n_ && take_step(best, i2)) return 1;

    // Deterministic sweeps starting just after i2.
    for (std::size_t s = 1; s < n_; ++s) {
      const std::size_t i1 = (i2 + s) % n_;
      if (is_free(i1) && take_step(i1, i2)) return 1;
    }
    for (std::size_t s = 1; s < n_; ++s) {
      const std::size_t i1 = (i2 + s) % n_;
      if (!is_free(i1) && take_step(i1, i2)) return 1;
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1_old = alpha_[i1];
    const double a2_old = alpha_[i2];
    const double y1 = y_[i1];
    const double y2 = y_[i2];
    const double e1 = error_[i1];
    const double e2 = error_[i2];
    const double s = y1 * y2;

    double lo = 0.0;
    double hi = 0.0;
    if (s < 0.0) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(c_, c_ + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - c_);
      hi = std::min(c_, a1_old + a2_old);
    }
    if (!(lo < hi)) return false;

    const double k11 = k_(i1, i1);
    const double k12 = k_(i1, i2);
    const double k22 = k_(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;

    double a2 = 0.0;
    if (eta > 0.0) {
      a2 = std::clamp(a2_old + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Objective at both ends of the feasible segment.
      const double f1 = y1 * (e1 - bias_) - a1_old * k11 - s * a2_old * k12;
      const double f2 = y2 * (e2 - bias_) - s * a1_old * k12 - a2_old * k22;
      const double l1 = a1_old + s * (a2_old - lo);
      const double h1 = a1_old + s * (a2_old - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12) {
        a2 = lo;
      } else if (obj_lo > obj_hi + 1e-12) {
        a2 = hi;
      } else {
        a2 = a2_old;
      }
    }
    if (a2 < kAlphaEps) a2 = 0.0;
    if (a2 > c_ - kAlphaEps) a2 = c_;
    if (std::abs(a2 - a2_old) < 1e-12 * (a2 + a2_old + 1e-12)) return false;

    double a1 = a1_old + s * (a2_old - a2);
    if (a1 < kAlphaEps) a1 = 0.0;
    if (a1 > c_ - kAlphaEps) a1 = c_;

    const double d1 = y1 * (a1 - a1_old);
    const double d2 = y2 * (a2 - a2_old);
    const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
    double bias = 0.0;
    if (a1 > 0.0 && a1 < c_) {
      bias = b1;
    } else if (a2 > 0.0 && a2 < c_) {
      bias = b2;
    } else {
      bias = 0.5 * (b1 + b2);
    }
    const double db = bias - bias_;
    for (std::size_t i = 0; i < n_; ++i) {
      error_[i] += d1 * k_(i1, i) + d2 * k_(i2, i) + db;
    }
    bias_ = bias;
    alpha_[i1] = a1;
    alpha_[i2] = a2;
    return true;
  }

  const KernelSource& k_;
  std::span<const double> y_;
  double c_;
  double tol_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  double bias_ = 0.0;
};

double decision(const SvmMachine& m, std::span<const double> x, double gamma) {
  double f = m.bias;
  for (std::size_t s = 0; s < m.coef.size(); ++s) {
    f += m.coef[s] * rbf_kernel(m.support_vectors.row(s), x, gamma);
  }
  return f;
}

SvmMachine fit_machine(const KernelSource& kernel, const Matrix& x,
                       std::span<const Label> labels, Label positive,
                       const SvmSpec& spec, std::size_t max_passes) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels[i] == positive ? 1.0 : -1.0;
  const DualSolution sol = solve_svm_dual(kernel, y, spec.c, spec.tolerance, max_passes);

  SvmMachine m;
  m.positive = positive;
  m.bias = sol.bias;
  m.converged = sol.converged;
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      support.push_back(i);
      m.coef.push_back(sol.alpha[i] * y[i]);
      m.alpha.push_back(sol.alpha[i]);
    }
  }
  m.support_vectors = x.select_rows(support);
  return m;
}

}  // namespace

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

DualSolution solve_svm_dual(const KernelSource& kernel, std::span<const double> y,
                            double c, double tolerance, std::size_t max_passes) {
  if (y.size() != kernel.size()) {
    throw Error(ErrorKind::kUsage, "solve_svm_dual: label count differs from kernel size");
  }
  SmoSolver solver(kernel, y, c, tolerance);
  return solver.run(max_passes);
}

double dual_objective(const KernelSource& kernel, std::span<const double> y,
                      std::span<const double> alpha) {
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel(i, j);
    }
  }
  return linear - 0.5 * quad;
}

SvmModel train_svm(const SvmSpec& spec, const Dataset& data) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  SvmModel model;
  model.gamma = spec.gamma ? *spec.gamma : 1.0 / static_cast<double>(std::max<std::size_t>(d, 1));
  model.c = spec.c;
  const std::size_t max_passes = spec.max_passes ? *spec.max_passes : 10 * n;

  const std::vector<std::size_t> counts = data.class_counts();
  std::vector<Label> present;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) present.push_back(static_cast<Label>(c));
  }
  if (present.size() == 1) {
    model.constant = present.front();
    return model;
  }

  std::unique_ptr<KernelSource> kernel;
  if (n <= kDenseKernelLimit) {
    kernel = std::make_unique<DenseRbfKernel>(data.features, model.gamma);
  } else {
    kernel = std::make_unique<LazyRbfKernel>(data.features, model.gamma);
  }

  if (data.n_classes() == 2) {
    model.machines.push_back(
        fit_machine(*kernel, data.features, data.labels, 1, spec, max_passes));
  } else {
    for (Label c : present) {
      model.machines.push_back(
          fit_machine(*kernel, data.features, data.labels, c, spec, max_passes));
    }
  }
  return model;
}

Label svm_predict(const SvmModel& model, std::span<const double> x, std::size_t n_classes) {
  if (model.constant) return *model.constant;
  if (n_classes == 2 && model.machines.size() == 1) {
    return decision(model.machines.front(), x, model.gamma) > 0.0 ? 1 : 0;
  }
  Label best = model.machines.front().positive;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& m : model.machines) {
    const double f = decision(m, x, model.gamma);
    // Machines are ordered by class id, so strict > keeps the lowest id on ties.
    if (f > best_score) {
      best_score = f;
      best = m.positive;
    }
  }
  return best;
}

}  // namespace evofs::ml
