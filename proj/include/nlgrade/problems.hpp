#pragma once

// Benchmark geometries. Base domains are 15x10 mm (cantilever) and 20x10 mm
// (bridge); every length, including supports, loads and solid patches, is
// multiplied by the scale factor s. The element count depends only on the
// resolution (elements per mm at s = 1) and the refinement level, so h grows
// with s.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/problem.hpp"

namespace nlgrade {

enum class ProblemKind { cantilever, bridge };

inline const char* to_string(ProblemKind k) {
  return k == ProblemKind::cantilever ? "cantilever" : "bridge";
}

inline ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "cantilever") return ProblemKind::cantilever;
  if (s == "bridge") return ProblemKind::bridge;
  throw ValidationError("problems: unknown problem kind '" + s + "' (expected cantilever or bridge)");
}

struct ProblemSpec {
  ProblemKind kind = ProblemKind::cantilever;
  double scale = 1.0;
  int level = 0;                 // each level halves h
  double elements_per_mm = 8.0;  // at s = 1, level 0
  double volume_fraction = -1.0; // < 0: 0.4 cantilever, 0.2 bridge
  bool nondesign = true;         // solid patches at supports and loads
  double traction = 1.0;         // MPa

  [[nodiscard]] double fraction() const {
    if (volume_fraction >= 0.0) return volume_fraction;
    return kind == ProblemKind::cantilever ? 0.4 : 0.2;
  }
  [[nodiscard]] double per_mm() const { return elements_per_mm * std::ldexp(1.0, level); }
  [[nodiscard]] double h() const { return scale / per_mm(); }

  void validate() const {
    require(scale > 0.0, "problems: scale factor s must be positive");
    require(level >= 0, "problems: refinement level must be >= 0");
    require(elements_per_mm > 0.0, "problems: elements_per_mm must be positive");
    const double vf = fraction();
    require(vf > 0.0 && vf < 1.0, "problems: volume fraction must lie in (0,1)");
    require(traction > 0.0, "problems: traction must be positive");
  }
};

namespace detail {

// Number of elements spanning `base_mm` (a length at s = 1); must be integral.
inline int element_span(const ProblemSpec& spec, double base_mm, const char* what) {
  const double n = base_mm * spec.per_mm();
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream msg;
    msg << "problems: " << what << " of " << base_mm * spec.scale << " mm spans " << n
        << " elements of size h=" << spec.h() << "; it must be a whole number of elements";
    throw ValidationError(msg.str());
  }
  return static_cast<int>(r);
}

// Consistent nodal forces of a uniform traction on the segment [a, b] of a
// straight mesh edge. `nodes` are the edge nodes in order, `coord` their
// positions along the edge.
inline void add_edge_traction(BoundaryConditions& bcs, const std::vector<int>& nodes,
                              const std::vector<double>& coord, double a, double b,
                              double traction_per_length, int component) {
  std::vector<double> f(nodes.size(), 0.0);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double ya = coord[k], yb = coord[k + 1];
    const double lo = std::max(ya, a), hi = std::min(yb, b);
    if (hi <= lo) continue;
    const double len = yb - ya;
    // integrals of the two linear shape functions over [lo, hi]
    const double ia = ((yb - lo) * (yb - lo) - (yb - hi) * (yb - hi)) / (2.0 * len);
    const double ib = ((hi - ya) * (hi - ya) - (lo - ya) * (lo - ya)) / (2.0 * len);
    f[k] += traction_per_length * ia;
    f[k + 1] += traction_per_length * ib;
  }
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (f[k] != 0.0) bcs.loads.emplace_back(2 * nodes[k] + component, f[k]);
}

inline double volume_bound(const StructuredMesh& mesh, const ElementMask& mask, double fraction) {
  const double v = mesh.element_volume();
  return fraction * v * mask.num_design() + v * mask.num_nondesign();
}

}  // namespace detail

inline DesignProblem build_cantilever(const ProblemSpec& spec) {
  spec.validate();
  const double s = spec.scale;
  const int nx = detail::element_span(spec, 15.0, "domain width");
  const int ny = detail::element_span(spec, 10.0, "domain height");
  DesignProblem p;
  p.name = "cantilever";
  p.mesh = build_mesh(15.0 * s, 10.0 * s, nx, ny);
  p.mask = ElementMask(p.mesh.num_elements());
  if (spec.nondesign) {
    detail::element_span(spec, 0.5, "solid column width");
    detail::element_span(spec, 4.5, "load patch offset");
    detail::element_span(spec, 5.5, "load patch end");
    p.mask.set_solid_box(p.mesh, 0.0, 0.5 * s, 0.0, 10.0 * s);
    p.mask.set_solid_box(p.mesh, 14.5 * s, 15.0 * s, 4.5 * s, 5.5 * s);
  }
  for (int j = 0; j <= ny; ++j) {
    const int n = p.mesh.node(0, j);
    p.bcs.fixed_dofs.push_back(2 * n);
    p.bcs.fixed_dofs.push_back(2 * n + 1);
  }
  std::sort(p.bcs.fixed_dofs.begin(), p.bcs.fixed_dofs.end());
  std::vector<int> edge;
  std::vector<double> ys;
  for (int j = 0; j <= ny; ++j) {
    edge.push_back(p.mesh.node(nx, j));
    ys.push_back(j * p.mesh.h);
  }
  detail::add_edge_traction(p.bcs, edge, ys, 4.5 * s, 5.5 * s,
                            -spec.traction * p.mesh.thickness, 1);
  p.volume_fraction = spec.fraction();
  p.volume_bound = detail::volume_bound(p.mesh, p.mask, p.volume_fraction);
  return p;
}

inline DesignProblem build_bridge(const ProblemSpec& spec) {
  spec.validate();
  const double s = spec.scale;
  const int nx = detail::element_span(spec, 20.0, "domain width");
  const int ny = detail::element_span(spec, 10.0, "domain height");
  DesignProblem p;
  p.name = "bridge";
  p.mesh = build_mesh(20.0 * s, 10.0 * s, nx, ny);
  p.mask = ElementMask(p.mesh.num_elements());
  if (spec.nondesign) {
    detail::element_span(spec, 0.5, "solid strip thickness");
    detail::element_span(spec, 1.0, "support patch width");
    p.mask.set_solid_box(p.mesh, 0.0, 20.0 * s, 9.5 * s, 10.0 * s);
    p.mask.set_solid_box(p.mesh, 0.0, 1.0 * s, 0.0, 0.5 * s);
    p.mask.set_solid_box(p.mesh, 19.0 * s, 20.0 * s, 0.0, 0.5 * s);
  }
  const double tol = 1e-9 * p.mesh.h;
  for (int i = 0; i <= nx; ++i) {
    const double x = i * p.mesh.h;
    if (x <= 1.0 * s + tol || x >= 19.0 * s - tol) {
      const int n = p.mesh.node(i, 0);
      p.bcs.fixed_dofs.push_back(2 * n);
      p.bcs.fixed_dofs.push_back(2 * n + 1);
    }
  }
  std::vector<int> edge;
  std::vector<double> xs;
  for (int i = 0; i <= nx; ++i) {
    edge.push_back(p.mesh.node(i, ny));
    xs.push_back(i * p.mesh.h);
  }
  detail::add_edge_traction(p.bcs, edge, xs, 0.0, 20.0 * s, -spec.traction * p.mesh.thickness, 1);
  p.volume_fraction = spec.fraction();
  p.volume_bound = detail::volume_bound(p.mesh, p.mask, p.volume_fraction);
  return p;
}

inline DesignProblem build_problem(const ProblemSpec& spec) {
  return spec.kind == ProblemKind::cantilever ? build_cantilever(spec) : build_bridge(spec);
}

/// Mirror of element e about the vertical center line.
inline int mirror_element(const StructuredMesh& mesh, int e) {
  const int i = e % mesh.nx, j = e / mesh.nx;
  return mesh.element(mesh.nx - 1 - i, j);
}

inline int mirror_node(const StructuredMesh& mesh, int n) {
  const int i = n % (mesh.nx + 1), j = n / (mesh.nx + 1);
  return mesh.node(mesh.nx - i, j);
}

}  // namespace nlgrade
