#pragma once

// Adjoint compliance gradient and volume gradient through the whole filter
// chain. Compliance is self-adjoint (K symmetric), so the adjoint state is u.

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/fem.hpp"
#include "nlgrade/filters.hpp"
#include "nlgrade/problem.hpp"

namespace nlgrade {

struct GradientBundle {
  std::vector<double> dc_dmu;     // design variables only
  std::vector<double> dg_dmu;     // design variables only
  std::vector<double> dc_dalpha;  // all elements
  std::vector<double> dalpha_drho_diag;
};

/// dc/dalpha_e = -(1 - kappa) E0 u_e^T K_e u_e.
inline std::vector<double> compliance_grad_alpha(std::span<const double> element_energies,
                                                 double kappa, double E0) {
  std::vector<double> out(element_energies.size());
  const double dE = (1.0 - kappa) * E0;
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = -dE * element_energies[e];
  return out;
}

inline std::vector<double> compliance_grad_alpha(const FemModel& model, const Eigen::VectorXd& u) {
  return compliance_grad_alpha(model.element_energies(u), model.kappa(), model.elasticity().E0);
}

namespace detail {
inline void check_stages(const FieldStages& st, const FilterParams& params) {
  if (st.projection != params.projection || (params.projection && st.beta != params.beta)) {
    std::ostringstream msg;
    msg << "sensitivity: stages were computed with beta=" << st.beta
        << (st.projection ? "" : " (no projection)") << " but the current schedule has beta="
        << params.beta << (params.projection ? "" : " (no projection)");
    throw RuntimeFailure(msg.str());
  }
}
}  // namespace detail

/// Diagonal part of d alpha / d rho: p rho^(p-1) [zeta + (1-zeta) rho_bar], or
/// p rho^(p-1) when grading is bypassed.
inline std::vector<double> alpha_rho_diagonal(const FieldStages& st, const FilterParams& params) {
  std::vector<double> d(st.rho.size());
  for (std::size_t e = 0; e < d.size(); ++e) {
    const double dp = params.p * std::pow(st.rho[e], params.p - 1.0);
    d[e] = params.delta > 0.0 ? dp * (params.zeta + (1.0 - params.zeta) * st.rho_bar[e]) : dp;
  }
  return d;
}

/// Pulls an element-wise gradient w.r.t. rho back to the design variables.
inline std::vector<double> pull_back_rho(std::span<const double> d_rho, const FieldStages& st,
                                         const FilterOperators& ops, const ElementMask& mask) {
  std::vector<double> d_mu_tilde(d_rho.size());
  for (std::size_t e = 0; e < d_rho.size(); ++e)
    d_mu_tilde[e] = d_rho[e] * st.projection_derivative[e];
  return mask.restrict_to_design(ops.density.apply_transpose(d_mu_tilde));
}

/// dc/dmu for the design variables, given dc/dalpha on every element.
inline std::vector<double> chain_rule_backward(std::span<const double> dc_dalpha,
                                               const FieldStages& st, const FilterOperators& ops,
                                               const FilterParams& params, const ElementMask& mask,
                                               std::vector<double>* diag_out = nullptr) {
  detail::check_stages(st, params);
  require(dc_dalpha.size() == st.rho.size(), "sensitivity: dc/dalpha length mismatch");
  const auto diag = alpha_rho_diagonal(st, params);
  std::vector<double> dc_drho(dc_dalpha.size());
  for (std::size_t e = 0; e < dc_drho.size(); ++e) dc_drho[e] = dc_dalpha[e] * diag[e];

  if (params.delta > 0.0 && params.zeta < 1.0) {
    // (1 - zeta) * G^T (dc/dalpha o rho^p), G the max-row-normalized grading operator.
    std::vector<double> weighted(dc_dalpha.size());
    for (std::size_t e = 0; e < weighted.size(); ++e)
      weighted[e] = dc_dalpha[e] * std::pow(st.rho[e], params.p);
    const auto back = ops.grading->apply_transpose(weighted);
    for (std::size_t e = 0; e < dc_drho.size(); ++e) dc_drho[e] += (1.0 - params.zeta) * back[e];
  }
  if (diag_out) *diag_out = diag;
  return pull_back_rho(dc_drho, st, ops, mask);
}

struct VolumeResult {
  double g = 0.0;
  std::vector<double> dg_dmu;
};

/// g = sum_e v_e rho_e over all elements (non-design included).
inline VolumeResult volume_and_grad(const FieldStages& st, const FilterOperators& ops,
                                    const StructuredMesh& mesh, const ElementMask& mask) {
  const double v = mesh.element_volume();
  VolumeResult out;
  for (double r : st.rho) out.g += v * r;
  const std::vector<double> dv(st.rho.size(), v);
  out.dg_dmu = pull_back_rho(dv, st, ops, mask);
  return out;
}

struct Evaluation {
  double compliance = 0.0;
  double volume = 0.0;
  FieldStages stages;
  Eigen::VectorXd u;
  GradientBundle grad;
};

/// Bundles operators and the FE model so a design vector can be evaluated
/// (objective, constraint and both gradients) in one call.
class ComplianceEvaluator {
 public:
  ComplianceEvaluator(const DesignProblem& problem, const FilterParams& params,
                      const ElasticityParams& elasticity, SolverSettings solver = {})
      : problem_(problem), params_(params),
        ops_(build_filter_operators(problem.mesh, params)),
        model_(problem.mesh, problem.bcs, elasticity, params.kappa, solver) {}

  [[nodiscard]] const FilterParams& params() const { return params_; }
  [[nodiscard]] const FilterOperators& operators() const { return ops_; }
  [[nodiscard]] FemModel& model() { return model_; }
  [[nodiscard]] const DesignProblem& problem() const { return problem_; }

  void set_beta(double beta) { params_.beta = beta; }

  [[nodiscard]] FieldStages forward(std::span<const double> mu_design) const {
    const auto full = problem_.mask.expand({mu_design.begin(), mu_design.end()}, 1.0);
    return forward_pipeline(full, problem_.mesh, problem_.mask, params_, ops_);
  }

  [[nodiscard]] Evaluation evaluate(std::span<const double> mu_design, bool with_gradient = true) {
    Evaluation ev;
    ev.stages = forward(mu_design);
    ev.u = solve_state(model_, ev.stages.alpha);
    ev.compliance = model_.compliance(ev.u);
    auto vol = volume_and_grad(ev.stages, ops_, problem_.mesh, problem_.mask);
    ev.volume = vol.g;
    if (with_gradient) {
      ev.grad.dc_dalpha = compliance_grad_alpha(model_, ev.u);
      ev.grad.dc_dmu = chain_rule_backward(ev.grad.dc_dalpha, ev.stages, ops_, params_,
                                           problem_.mask, &ev.grad.dalpha_drho_diag);
      ev.grad.dg_dmu = std::move(vol.dg_dmu);
    }
    return ev;
  }

 private:
  DesignProblem problem_;
  FilterParams params_;
  FilterOperators ops_;
  FemModel model_;
};

}  // namespace nlgrade
