#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/mma.hpp"
#include "nlgrade/problem.hpp"
#include "nlgrade/sensitivity.hpp"

namespace nlgrade {

struct ContinuationSchedule {
  std::vector<double> beta_values{1, 2, 4, 8, 16, 32, 64};
  int iterations_per_stage = 50;
  int max_total_iterations = 1000;
  double tolerance = 1e-4;  // on max |delta mu|, checked in the last stage

  void validate() const {
    require(!beta_values.empty(), "optimizer: beta schedule is empty");
    for (std::size_t k = 0; k < beta_values.size(); ++k) {
      require(beta_values[k] > 0.0, "optimizer: beta values must be positive");
      if (k > 0)
        require(beta_values[k] > beta_values[k - 1],
                "optimizer: beta values must be strictly increasing");
    }
    require(iterations_per_stage >= 1, "optimizer: iterations_per_stage must be >= 1");
    require(max_total_iterations >= 1, "optimizer: max_total_iterations must be >= 1");
    require(tolerance > 0.0, "optimizer: convergence tolerance must be positive");
  }

  /// Stage index for a 1-based iteration number.
  [[nodiscard]] std::size_t stage_at(int iteration) const {
    const auto k = static_cast<std::size_t>((iteration - 1) / iterations_per_stage);
    return std::min(k, beta_values.size() - 1);
  }
  [[nodiscard]] double beta_at(int iteration) const { return beta_values[stage_at(iteration)]; }
  [[nodiscard]] int final_stage_start() const {
    return static_cast<int>(beta_values.size() - 1) * iterations_per_stage + 1;
  }
};

struct HistoryRow {
  int iter = 0;
  double beta = 0.0;
  double compliance = 0.0;
  double volume = 0.0;
  double change = 0.0;
};

struct OptResult {
  std::vector<HistoryRow> history;
  std::vector<double> mu;  // design variables
  FieldStages stages;      // final design, current beta
  double compliance = 0.0;
  double volume = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OptimizerHooks {
  /// Called on the first iteration of every beta stage with that iterate's fields.
  std::function<void(int iter, double beta, const FieldStages&)> on_stage_start;
  std::function<void(const HistoryRow&)> on_iteration;
};

namespace detail {
inline void check_finite(const Evaluation& ev, int iter) {
  auto bad = [](double v) { return !std::isfinite(v); };
  std::string where;
  if (bad(ev.compliance)) where = "compliance";
  else if (bad(ev.volume)) where = "volume";
  else if (std::any_of(ev.stages.alpha.begin(), ev.stages.alpha.end(), bad)) where = "alpha";
  else if (std::any_of(ev.grad.dc_dmu.begin(), ev.grad.dc_dmu.end(), bad)) where = "dc/dmu";
  else if (std::any_of(ev.grad.dg_dmu.begin(), ev.grad.dg_dmu.end(), bad)) where = "dg/dmu";
  if (!where.empty()) {
    std::ostringstream msg;
    msg << "optimizer: non-finite " << where << " at iteration " << iter
        << " (compliance=" << ev.compliance << ", volume=" << ev.volume
        << ", beta=" << ev.stages.beta << ")";
    throw RuntimeFailure(msg.str());
  }
}
}  // namespace detail

/// Compliance minimization under the volume bound with beta continuation.
/// Without projection the schedule's betas are ignored and every iteration
/// counts as the final stage.
inline OptResult run_optimization(const DesignProblem& problem, FilterParams params,
                                  const ElasticityParams& elasticity,
                                  const ContinuationSchedule& schedule,
                                  const MmaSettings& mma_settings = {},
                                  const SolverSettings& solver = {},
                                  const OptimizerHooks& hooks = {}) {
  schedule.validate();
  params.validate();
  require(problem.mask.num_design() >= 1, "optimizer: problem has no design elements");
  require(problem.volume_bound > 0.0, "optimizer: volume bound must be positive");

  const int nd = problem.mask.num_design();
  params.beta = schedule.beta_at(1);
  ComplianceEvaluator evaluator(problem, params, elasticity, solver);
  Mma mma(nd, mma_settings);

  OptResult res;
  std::vector<double> mu(static_cast<std::size_t>(nd), problem.volume_fraction);
  double c_scale = 1.0;
  double beta = -1.0;
  const double V = problem.volume_bound;
  const int last_stage_start = params.projection ? schedule.final_stage_start() : 1;

  for (int k = 1; k <= schedule.max_total_iterations; ++k) {
    const double bk = params.projection ? schedule.beta_at(k) : schedule.beta_values.front();
    const bool stage_start = bk != beta;
    if (stage_start) {
      beta = bk;
      evaluator.set_beta(beta);
      mma.reset();
    }
    const auto ev = evaluator.evaluate(mu);
    detail::check_finite(ev, k);
    if (stage_start && hooks.on_stage_start) hooks.on_stage_start(k, beta, ev.stages);
    if (k == 1) c_scale = ev.compliance > 0.0 ? ev.compliance : 1.0;

    std::vector<double> df(ev.grad.dc_dmu.size()), dg(ev.grad.dg_dmu.size());
    for (std::size_t j = 0; j < df.size(); ++j) {
      df[j] = ev.grad.dc_dmu[j] / c_scale;
      dg[j] = ev.grad.dg_dmu[j] / V;
    }
    auto next = mma.step(mu, df, ev.volume / V - 1.0, dg);
    double change = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) change = std::max(change, std::abs(next[j] - mu[j]));
    mu = std::move(next);

    HistoryRow row{k, params.projection ? beta : 0.0, ev.compliance, ev.volume, change};
    res.history.push_back(row);
    if (hooks.on_iteration) hooks.on_iteration(row);
    res.iterations = k;
    if (k >= last_stage_start && change < schedule.tolerance) {
      res.converged = true;
      break;
    }
  }

  const auto final_ev = evaluator.evaluate(mu, false);
  res.mu = std::move(mu);
  res.stages = final_ev.stages;
  res.compliance = final_ev.compliance;
  res.volume = final_ev.volume;
  return res;
}

}  // namespace nlgrade
