#pragma once

// Thickness-dependent modulus of a 1D bar under the nonlocal grading model.
// E(x) = [zeta + (1 - zeta) phi(x)] E0, where phi(x) is the share of the cone
// kernel centered at x that falls inside the bar [-t/2, t/2].

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "nlgrade/error.hpp"

namespace nlgrade::material1d {

struct Bar1DSpec {
  double t = 1.0;      // thickness, mm
  double delta = 0.4;  // kernel radius, mm
  double zeta = 0.0;   // uniform fraction of the modulus
  double E0 = 1.0;     // MPa
  int n = 1000;        // midpoint samples across the thickness

  void validate() const {
    require(t > 0.0, "bar1d: thickness t must be positive");
    require(delta > 0.0, "bar1d: kernel radius delta must be positive");
    require(zeta >= 0.0 && zeta <= 1.0, "bar1d: zeta must lie in [0,1]");
    require(E0 > 0.0, "bar1d: E0 must be positive");
    require(n >= 2, "bar1d: at least two midpoint samples are required");
  }
};

/// Normalized 1D cone kernel. Over the whole real line the cone integrates to
/// delta^2, so that is the denominator.
inline double kernel_1d(double y, double x, double delta) {
  require(delta > 0.0, "bar1d: kernel radius delta must be positive");
  return std::max(delta - std::abs(y - x), 0.0) / (delta * delta);
}

inline double phi_1d(double x, double t, double delta, int n) {
  require(t > 0.0 && n >= 1, "bar1d: invalid thickness or sample count");
  const double half = 0.5 * t;
  if (std::abs(x) > half * (1.0 + 1e-12))
    throw ValidationError("bar1d: evaluation point lies outside the bar");
  const double dy = t / n;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double y = -half + (k + 0.5) * dy;
    sum += kernel_1d(y, x, delta);
  }
  return std::min(1.0, sum * dy);
}

inline double modulus_at(const Bar1DSpec& spec, double x) {
  return (spec.zeta + (1.0 - spec.zeta) * phi_1d(x, spec.t, spec.delta, spec.n)) * spec.E0;
}

/// E(x) sampled at n_points equally spaced points from -t/2 to t/2 inclusive.
inline std::vector<std::pair<double, double>> modulus_profile_1d(const Bar1DSpec& spec,
                                                                 int n_points) {
  spec.validate();
  require(n_points >= 2, "bar1d: profile needs at least two points");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double x = -0.5 * spec.t + spec.t * k / (n_points - 1);
    out.emplace_back(x, modulus_at(spec, x));
  }
  return out;
}

/// Thickness average of E(x), midpoint rule with spec.n samples.
inline double effective_modulus_1d(const Bar1DSpec& spec) {
  spec.validate();
  if (spec.zeta == 1.0) return spec.E0;
  const double dx = spec.t / spec.n;
  double sum = 0.0;
  for (int k = 0; k < spec.n; ++k) sum += modulus_at(spec, -0.5 * spec.t + (k + 0.5) * dx);
  return sum / spec.n;
}

}  // namespace nlgrade::material1d
