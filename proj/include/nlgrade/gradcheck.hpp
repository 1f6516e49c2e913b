#pragma once

// Central finite-difference check of the adjoint compliance gradient and the
// volume gradient. Only forward evaluations are used on the FD side.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nlgrade/problems.hpp"
#include "nlgrade/sensitivity.hpp"

namespace nlgrade {

struct GradCheckRow {
  double step = 0.0;
  double max_rel_compliance = 0.0;
  double max_rel_volume = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckRow> rows;
  double best_compliance = 0.0;
  double best_volume = 0.0;
  std::vector<double> adjoint_dc;
  std::vector<double> adjoint_dg;
};

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& f) {
  double fmax = 0.0;
  for (double v : f) fmax = std::max(fmax, std::abs(v));
  const double floor = std::max(1e-6 * fmax, 1e-300);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    worst = std::max(worst, std::abs(a[j] - f[j]) / std::max(std::abs(f[j]), floor));
  return worst;
}

inline GradCheckResult gradient_check(ComplianceEvaluator& evaluator, const std::vector<double>& mu,
                                      const std::vector<double>& steps = {1e-4, 1e-5, 1e-6}) {
  GradCheckResult res;
  const auto base = evaluator.evaluate(mu);
  res.adjoint_dc = base.grad.dc_dmu;
  res.adjoint_dg = base.grad.dg_dmu;
  res.best_compliance = res.best_volume = std::numeric_limits<double>::infinity();
  for (double h : steps) {
    std::vector<double> fd_c(mu.size()), fd_g(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) {
      auto plus = mu, minus = mu;
      plus[j] += h;
      minus[j] -= h;
      const auto ep = evaluator.evaluate(plus, false);
      const auto em = evaluator.evaluate(minus, false);
      fd_c[j] = (ep.compliance - em.compliance) / (2.0 * h);
      fd_g[j] = (ep.volume - em.volume) / (2.0 * h);
    }
    GradCheckRow row{h, max_relative_error(res.adjoint_dc, fd_c), max_relative_error(res.adjoint_dg, fd_g)};
    res.best_compliance = std::min(res.best_compliance, row.max_rel_compliance);
    res.best_volume = std::min(res.best_volume, row.max_rel_volume);
    res.rows.push_back(row);
  }
  return res;
}

/// The reference check setup: a 6x4-element cantilever with h = 0.2 mm (no
/// solid patches, which cannot be resolved at this size), R = 1.3h,
/// delta = 0.4 mm, zeta = 0, p = 2.5, eta = 0.5.
struct GradCheckSetup {
  DesignProblem problem;
  FilterParams params;
  ElasticityParams elasticity;
  std::vector<double> mu;
};

inline GradCheckSetup gradient_check_setup(double beta = 2.0, unsigned seed = 2024,
                                           double delta = 0.4, double zeta = 0.0) {
  ProblemSpec spec;
  spec.kind = ProblemKind::cantilever;
  spec.elements_per_mm = 0.4;
  spec.scale = 0.08;
  spec.nondesign = false;
  GradCheckSetup s;
  s.problem = build_cantilever(spec);
  s.params.R = 1.3 * s.problem.mesh.h;
  s.params.delta = delta;
  s.params.beta = beta;
  s.params.eta = 0.5;
  s.params.zeta = zeta;
  s.params.p = 2.5;
  s.params.kappa = 1e-9;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.1, 0.9);
  s.mu.resize(static_cast<std::size_t>(s.problem.mask.num_design()));
  for (auto& m : s.mu) m = dist(rng);
  return s;
}

}  // namespace nlgrade
