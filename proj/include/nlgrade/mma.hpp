#pragma once

// Method of Moving Asymptotes for
//   min f0(x)  s.t.  g(x) <= 0,  xmin <= x <= xmax
// with a single constraint. Each step builds the separable convex
// approximation around x and solves its dual, which has one multiplier,
// by bisection on the (monotone) dual derivative. An elastic variable y with
// cost c*y + y^2/2 keeps the subproblem feasible.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "nlgrade/error.hpp"

namespace nlgrade {

struct MmaSettings {
  double asy_init = 0.5;
  double asy_decr = 0.7;
  double asy_incr = 1.2;
  double move = 0.2;
  double albefa = 0.1;
  double dual_tolerance = 1e-10;
  double elastic_cost = 1000.0;
  double regularization = 1e-5;  // relative to the largest gradient entry

  void validate() const {
    require(asy_init > 0.0 && asy_init <= 1.0, "mma: asy_init must lie in (0,1]");
    require(asy_decr > 0.0 && asy_decr < 1.0, "mma: asy_decr must lie in (0,1)");
    require(asy_incr > 1.0, "mma: asy_incr must exceed 1");
    require(move > 0.0 && move <= 1.0, "mma: move limit must lie in (0,1]");
    require(albefa > 0.0 && albefa < 1.0, "mma: albefa must lie in (0,1)");
    require(dual_tolerance > 0.0, "mma: dual tolerance must be positive");
  }
};

class Mma {
 public:
  Mma(int n, MmaSettings settings = {}) : n_(n), s_(settings) {
    s_.validate();
    require(n >= 1, "mma: need at least one variable");
    low_.assign(static_cast<std::size_t>(n), 0.0);
    upp_.assign(static_cast<std::size_t>(n), 1.0);
  }

  /// Forgets iterate history so the next two steps use initial asymptotes.
  void reset() {
    iter_ = 0;
    xold1_.clear();
    xold2_.clear();
  }

  [[nodiscard]] int iterations_since_reset() const { return iter_; }
  [[nodiscard]] double multiplier() const { return lambda_; }
  [[nodiscard]] double elastic() const { return y_; }
  [[nodiscard]] const std::vector<double>& lower_asymptotes() const { return low_; }
  [[nodiscard]] const std::vector<double>& upper_asymptotes() const { return upp_; }

  /// One MMA update. `g` is the constraint value (feasible when <= 0).
  [[nodiscard]] std::vector<double> step(std::span<const double> x, std::span<const double> df,
                                         double g, std::span<const double> dg, double xmin = 0.0,
                                         double xmax = 1.0) {
    const auto n = static_cast<std::size_t>(n_);
    require(x.size() == n && df.size() == n && dg.size() == n, "mma: vector length mismatch");
    require(xmax > xmin, "mma: empty box");
    const double range = xmax - xmin;
    ++iter_;

    if (iter_ <= 2) {
      for (std::size_t j = 0; j < n; ++j) {
        low_[j] = x[j] - s_.asy_init * range;
        upp_[j] = x[j] + s_.asy_init * range;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const double trend = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
        const double gamma = trend > 0.0 ? s_.asy_incr : (trend < 0.0 ? s_.asy_decr : 1.0);
        low_[j] = x[j] - gamma * (xold1_[j] - low_[j]);
        upp_[j] = x[j] + gamma * (upp_[j] - xold1_[j]);
        low_[j] = std::clamp(low_[j], x[j] - 10.0 * range, x[j] - 0.01 * range);
        upp_[j] = std::clamp(upp_[j], x[j] + 0.01 * range, x[j] + 10.0 * range);
      }
    }

    double df_scale = 0.0, dg_scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      df_scale = std::max(df_scale, std::abs(df[j]));
      dg_scale = std::max(dg_scale, std::abs(dg[j]));
    }
    const double eps0 = s_.regularization * (df_scale > 0.0 ? df_scale : 1.0);
    const double eps1 = s_.regularization * (dg_scale > 0.0 ? dg_scale : 1.0);

    lo_.resize(n);
    hi_.resize(n);
    p0_.resize(n);
    q0_.resize(n);
    p1_.resize(n);
    q1_.resize(n);
    double r1 = g;
    for (std::size_t j = 0; j < n; ++j) {
      lo_[j] = std::max({xmin, low_[j] + s_.albefa * (x[j] - low_[j]), x[j] - s_.move * range});
      hi_[j] = std::min({xmax, upp_[j] - s_.albefa * (upp_[j] - x[j]), x[j] + s_.move * range});
      const double ux = upp_[j] - x[j];
      const double xl = x[j] - low_[j];
      const double span_ul = upp_[j] - low_[j];
      const double dfp = std::max(df[j], 0.0), dfm = std::max(-df[j], 0.0);
      const double dgp = std::max(dg[j], 0.0), dgm = std::max(-dg[j], 0.0);
      p0_[j] = ux * ux * (1.001 * dfp + 0.001 * dfm + eps0 / span_ul);
      q0_[j] = xl * xl * (0.001 * dfp + 1.001 * dfm + eps0 / span_ul);
      p1_[j] = ux * ux * (1.001 * dgp + 0.001 * dgm + eps1 / span_ul);
      q1_[j] = xl * xl * (0.001 * dgp + 1.001 * dgm + eps1 / span_ul);
      r1 -= p1_[j] / ux + q1_[j] / xl;
    }
    r1_ = r1;

    // Dual ascent on the single multiplier.
    double lam = 0.0;
    if (dual_derivative(0.0) > 0.0) {
      double lo = 0.0, hi = 1.0;
      int grow = 0;
      while (dual_derivative(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 200) {
          std::ostringstream msg;
          msg << "mma: could not bracket the dual multiplier, bracket [" << lo << ", " << hi << "]";
          throw RuntimeFailure(msg.str());
        }
      }
      int it = 0;
      while (hi - lo > s_.dual_tolerance * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (dual_derivative(mid) > 0.0)
          lo = mid;
        else
          hi = mid;
        if (++it > 400) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "mma: dual bisection did not converge, bracket [" << lo << ", " << hi << "]";
          throw RuntimeFailure(msg.str());
        }
      }
      lam = 0.5 * (lo + hi);
    }
    lambda_ = lam;
    y_ = std::max(0.0, lam - s_.elastic_cost);

    std::vector<double> xnew(n);
    for (std::size_t j = 0; j < n; ++j) xnew[j] = primal(j, lam);

    xold2_ = xold1_.empty() ? std::vector<double>(x.begin(), x.end()) : xold1_;
    xold1_.assign(x.begin(), x.end());
    return xnew;
  }

 private:
  [[nodiscard]] double primal(std::size_t j, double lam) const {
    const double P = p0_[j] + lam * p1_[j];
    const double Q = q0_[j] + lam * q1_[j];
    const double sp = std::sqrt(P), sq = std::sqrt(Q);
    const double xs = (sp * low_[j] + sq * upp_[j]) / (sp + sq);
    return std::clamp(xs, lo_[j], hi_[j]);
  }

  [[nodiscard]] double dual_derivative(double lam) const {
    double s = r1_;
    for (std::size_t j = 0; j < p0_.size(); ++j) {
      const double xj = primal(j, lam);
      s += p1_[j] / (upp_[j] - xj) + q1_[j] / (xj - low_[j]);
    }
    return s - std::max(0.0, lam - s_.elastic_cost);
  }

  int n_;
  MmaSettings s_;
  int iter_ = 0;
  std::vector<double> low_, upp_, xold1_, xold2_;
  std::vector<double> lo_, hi_, p0_, q0_, p1_, q1_;
  double r1_ = 0.0;
  double lambda_ = 0.0;
  double y_ = 0.0;
};

/// Free-function form of one MMA step on the unit box.
inline std::vector<double> mma_step(std::span<const double> mu, std::span<const double> dc, double g,
                                    std::span<const double> dg, Mma& state) {
  return state.step(mu, dc, g, dg, 0.0, 1.0);
}

}  // namespace nlgrade
