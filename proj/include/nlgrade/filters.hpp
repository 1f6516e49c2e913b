#pragma once

// Field pipeline on a structured mesh:
//   mu --density filter--> mu_tilde --projection--> rho --grading--> rho_bar
//   (rho, rho_bar) --> alpha --> elemental modulus.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/mesh.hpp"
#include "nlgrade/parallel.hpp"

namespace nlgrade {

enum class Stage { mu, mu_tilde, rho, rho_bar, alpha };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::mu: return "mu";
    case Stage::mu_tilde: return "mu_tilde";
    case Stage::rho: return "rho";
    case Stage::rho_bar: return "rho_bar";
    case Stage::alpha: return "alpha";
  }
  return "?";
}

struct DensityField {
  Stage stage = Stage::mu;
  std::vector<double> values;
};

struct FilterParams {
  double R = 1.0;        // density filter radius, mm
  double delta = 0.4;    // grading radius, mm; 0 disables grading
  double beta = 1.0;     // projection sharpness
  double eta = 0.5;      // projection threshold
  double zeta = 0.0;     // uniform share of the modulus
  double p = 3.0;        // SIMP exponent
  double kappa = 1e-9;   // void stiffness floor
  bool projection = true;

  [[nodiscard]] bool grading_active() const { return delta > 0.0 && zeta < 1.0; }

  void validate() const {
    require(R > 0.0, "filters: density filter radius R must be positive");
    require(delta >= 0.0, "filters: grading radius delta must be >= 0");
    require(beta > 0.0, "filters: projection sharpness beta must be positive");
    require(eta >= 0.0 && eta <= 1.0, "filters: projection threshold eta must lie in [0,1]");
    require(zeta >= 0.0 && zeta <= 1.0, "filters: zeta must lie in [0,1]");
    require(p >= 1.0, "filters: SIMP exponent p must be >= 1");
    require(kappa > 0.0 && kappa < 1.0, "filters: kappa must lie in (0,1)");
  }
};

/// Row-compressed convolution operator y_e = sum_i W_ei x_i / N_e.
/// W holds raw kernel weights times element volume; N_e is the row's divisor,
/// either its own sum (density filter) or one global maximum (grading).
/// The transpose of the normalized operator is stored alongside.
struct SparseOperator {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> cols;
  std::vector<double> weights;
  std::vector<double> row_normalizer;
  double global_normalizer = 0.0;  // > 0 only for the grading operator

  std::vector<int> t_row_ptr;
  std::vector<int> t_cols;
  std::vector<double> t_values;  // already divided by the source row's normalizer

  [[nodiscard]] std::size_t nonzeros() const { return cols.size(); }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == n, "filters: field length does not match operator");
    std::vector<double> y(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t e) {
      double s = 0.0;
      for (int k = row_ptr[e]; k < row_ptr[e + 1]; ++k) s += weights[k] * x[cols[k]];
      y[e] = s / row_normalizer[e];
    });
    return y;
  }

  [[nodiscard]] std::vector<double> apply_transpose(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == n, "filters: field length does not match operator");
    std::vector<double> y(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      double s = 0.0;
      for (int k = t_row_ptr[i]; k < t_row_ptr[i + 1]; ++k) s += t_values[k] * x[t_cols[k]];
      y[i] = s;
    });
    return y;
  }

  [[nodiscard]] double row_sum(int e) const {
    double s = 0.0;
    for (int k = row_ptr[e]; k < row_ptr[e + 1]; ++k) s += weights[k];
    return s / row_normalizer[e];
  }
};

namespace detail {

struct StencilEntry {
  int di;
  int dj;
  double weight;
};

// Cone weights max(radius - dist, 0) on integer element offsets. Offsets are
// listed in a fixed order so every interior row accumulates identically.
inline std::vector<StencilEntry> cone_stencil(double radius, double h) {
  const int reach = static_cast<int>(std::ceil(radius / h));
  std::vector<StencilEntry> out;
  for (int dj = -reach; dj <= reach; ++dj)
    for (int di = -reach; di <= reach; ++di) {
      const double w = radius - h * std::sqrt(static_cast<double>(di * di + dj * dj));
      if (w > 0.0) out.push_back({di, dj, w});
    }
  return out;
}

inline SparseOperator build_cone_operator(const StructuredMesh& mesh, double radius) {
  const auto stencil = cone_stencil(radius, mesh.h);
  const double v = mesh.element_volume();
  SparseOperator op;
  op.n = mesh.num_elements();
  op.row_ptr.assign(static_cast<std::size_t>(op.n) + 1, 0);
  op.cols.reserve(static_cast<std::size_t>(op.n) * stencil.size());
  op.weights.reserve(op.cols.capacity());
  for (int j = 0; j < mesh.ny; ++j)
    for (int i = 0; i < mesh.nx; ++i) {
      const int e = mesh.element(i, j);
      for (const auto& s : stencil) {
        const int ii = i + s.di;
        const int jj = j + s.dj;
        if (ii < 0 || jj < 0 || ii >= mesh.nx || jj >= mesh.ny) continue;
        op.cols.push_back(mesh.element(ii, jj));
        op.weights.push_back(s.weight * v);
      }
      op.row_ptr[static_cast<std::size_t>(e) + 1] = static_cast<int>(op.cols.size());
    }
  return op;
}

inline void build_transpose(SparseOperator& op) {
  const auto n = static_cast<std::size_t>(op.n);
  op.t_row_ptr.assign(n + 1, 0);
  for (int c : op.cols) ++op.t_row_ptr[static_cast<std::size_t>(c) + 1];
  for (std::size_t i = 0; i < n; ++i) op.t_row_ptr[i + 1] += op.t_row_ptr[i];
  op.t_cols.resize(op.cols.size());
  op.t_values.resize(op.cols.size());
  std::vector<int> fill(op.t_row_ptr.begin(), op.t_row_ptr.end() - 1);
  for (std::size_t e = 0; e < n; ++e)
    for (int k = op.row_ptr[e]; k < op.row_ptr[e + 1]; ++k) {
      const int slot = fill[static_cast<std::size_t>(op.cols[k])]++;
      op.t_cols[slot] = static_cast<int>(e);
      op.t_values[slot] = op.weights[k] / op.row_normalizer[e];
    }
}

}  // namespace detail

inline SparseOperator build_density_operator(const StructuredMesh& mesh, double R) {
  require(R > 0.0, "filters: density filter radius R must be positive");
  if (R < 0.5 * mesh.h)
    std::clog << "warning: density filter radius " << R << " is below h/2 = " << 0.5 * mesh.h
              << "; the filter reduces to the identity\n";
  auto op = detail::build_cone_operator(mesh, R);
  op.row_normalizer.resize(static_cast<std::size_t>(op.n));
  for (int e = 0; e < op.n; ++e) {
    double s = 0.0;
    for (int k = op.row_ptr[e]; k < op.row_ptr[e + 1]; ++k) s += op.weights[k];
    op.row_normalizer[e] = s;
  }
  detail::build_transpose(op);
  return op;
}

/// Grading operator: cone weights of radius delta, every row divided by the
/// largest row sum over the mesh, so rows whose support is fully inside the
/// domain sum to one and rows near the boundary sum to less.
inline SparseOperator build_grading_operator(const StructuredMesh& mesh, double delta) {
  if (!(delta > 0.0))
    throw ValidationError("filters: grading radius delta must be positive (use delta = 0 to disable grading)");
  const double limit = 0.5 * std::min(mesh.width(), mesh.height());
  if (delta > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "filters: grading radius delta=" << delta
        << " exceeds half the smallest domain dimension (" << limit
        << "); the kernel support must fit inside the domain";
    throw ValidationError(msg.str());
  }
  auto op = detail::build_cone_operator(mesh, delta);
  double max_sum = 0.0;
  for (int e = 0; e < op.n; ++e) {
    double s = 0.0;
    for (int k = op.row_ptr[e]; k < op.row_ptr[e + 1]; ++k) s += op.weights[k];
    max_sum = std::max(max_sum, s);
  }
  op.global_normalizer = max_sum;
  op.row_normalizer.assign(static_cast<std::size_t>(op.n), max_sum);
  detail::build_transpose(op);
  return op;
}

inline std::vector<double> apply_operator(const SparseOperator& op, std::span<const double> field) {
  return op.apply(field);
}

// Smoothed Heaviside projection ---------------------------------------------

inline double project(double x, double beta, double eta) {
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double den = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
  return (std::tanh(beta * eta) + std::tanh(beta * (x - eta))) / den;
}

inline double project_derivative(double x, double beta, double eta) {
  const double den = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
  const double th = std::tanh(beta * (x - eta));
  return beta * (1.0 - th * th) / den;
}

struct Projection {
  std::vector<double> rho;
  std::vector<double> derivative;
};

inline Projection heaviside_project(std::span<const double> mu_tilde, double beta, double eta) {
  require(beta > 0.0, "filters: projection sharpness beta must be positive");
  require(eta >= 0.0 && eta <= 1.0, "filters: projection threshold eta must lie in [0,1]");
  Projection out;
  out.rho.resize(mu_tilde.size());
  out.derivative.resize(mu_tilde.size());
  for (std::size_t e = 0; e < mu_tilde.size(); ++e) {
    out.rho[e] = project(mu_tilde[e], beta, eta);
    out.derivative[e] = project_derivative(mu_tilde[e], beta, eta);
  }
  return out;
}

inline double stiffness_scaling(double rho, double rho_bar, double zeta, double p) {
  return std::pow(rho, p) * (zeta + (1.0 - zeta) * rho_bar);
}

inline std::vector<double> stiffness_scaling(std::span<const double> rho,
                                             std::span<const double> rho_bar, double zeta,
                                             double p) {
  require(rho.size() == rho_bar.size(), "filters: rho and rho_bar lengths differ");
  std::vector<double> alpha(rho.size());
  for (std::size_t e = 0; e < rho.size(); ++e)
    alpha[e] = stiffness_scaling(rho[e], rho_bar[e], zeta, p);
  return alpha;
}

inline double elemental_modulus(double alpha, double kappa, double E0) {
  return (kappa + (1.0 - kappa) * alpha) * E0;
}

// Forward pipeline -----------------------------------------------------------

struct FilterOperators {
  SparseOperator density;
  std::optional<SparseOperator> grading;  // absent when delta == 0
};

inline FilterOperators build_filter_operators(const StructuredMesh& mesh, const FilterParams& params) {
  params.validate();
  FilterOperators ops{build_density_operator(mesh, params.R), std::nullopt};
  if (params.delta > 0.0) ops.grading = build_grading_operator(mesh, params.delta);
  return ops;
}

/// All intermediate fields of one forward evaluation, over every element.
struct FieldStages {
  std::vector<double> mu;
  std::vector<double> mu_tilde;
  std::vector<double> rho;
  std::vector<double> rho_bar;
  std::vector<double> alpha;
  std::vector<double> projection_derivative;  // d rho / d mu_tilde; 0 on non-design
  double beta = 0.0;
  bool projection = true;
  bool graded = false;
};

inline void check_stage_range(Stage stage, std::span<const double> v) {
  for (std::size_t e = 0; e < v.size(); ++e) {
    if (!(v[e] >= -1e-12 && v[e] <= 1.0 + 1e-12)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "filters: stage " << stage_name(stage) << " value " << v[e] << " at element " << e
          << " is outside [0,1]";
      throw RuntimeFailure(msg.str());
    }
  }
}

/// Runs mu (full element field, non-design entries ignored) through the
/// pipeline. Non-design elements are forced to rho = 1 after projection and
/// take part in grading as solid material.
inline FieldStages forward_pipeline(std::span<const double> mu, const StructuredMesh& mesh,
                                    const ElementMask& mask, const FilterParams& params,
                                    const FilterOperators& ops) {
  const auto n = static_cast<std::size_t>(mesh.num_elements());
  require(mu.size() == n, "filters: mu length does not match the mesh");
  require(mask.size() == mesh.num_elements(), "filters: mask size does not match the mesh");
  require(ops.density.n == mesh.num_elements(), "filters: operators were built for another mesh");

  FieldStages st;
  st.beta = params.beta;
  st.projection = params.projection;
  st.mu.assign(mu.begin(), mu.end());
  for (std::size_t e = 0; e < n; ++e)
    if (!mask.is_design(static_cast<int>(e))) st.mu[e] = 1.0;
  check_stage_range(Stage::mu, st.mu);

  st.mu_tilde = ops.density.apply(st.mu);
  check_stage_range(Stage::mu_tilde, st.mu_tilde);

  if (params.projection) {
    auto proj = heaviside_project(st.mu_tilde, params.beta, params.eta);
    st.rho = std::move(proj.rho);
    st.projection_derivative = std::move(proj.derivative);
  } else {
    st.rho = st.mu_tilde;
    st.projection_derivative.assign(n, 1.0);
  }
  for (std::size_t e = 0; e < n; ++e)
    if (!mask.is_design(static_cast<int>(e))) {
      st.rho[e] = 1.0;
      st.projection_derivative[e] = 0.0;
    }
  check_stage_range(Stage::rho, st.rho);

  if (params.delta > 0.0) {
    require(ops.grading.has_value(), "filters: grading operator missing for delta > 0");
    st.rho_bar = ops.grading->apply(st.rho);
    st.graded = params.zeta < 1.0;
  } else {
    st.rho_bar = st.rho;
    st.graded = false;
  }
  check_stage_range(Stage::rho_bar, st.rho_bar);

  st.alpha.resize(n);
  if (params.delta > 0.0) {
    for (std::size_t e = 0; e < n; ++e)
      st.alpha[e] = stiffness_scaling(st.rho[e], st.rho_bar[e], params.zeta, params.p);
  } else {
    for (std::size_t e = 0; e < n; ++e) st.alpha[e] = std::pow(st.rho[e], params.p);
  }
  check_stage_range(Stage::alpha, st.alpha);
  return st;
}

inline double grayness(std::span<const double> rho, double element_volume) {
  if (rho.empty()) return 0.0;
  double s = 0.0;
  for (double r : rho) s += 4.0 * r * (1.0 - r) * element_volume;
  return s / (element_volume * static_cast<double>(rho.size()));
}

}  // namespace nlgrade
