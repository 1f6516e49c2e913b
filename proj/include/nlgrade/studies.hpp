#pragma once

// Orchestration of complete runs: a single optimization with all artifacts,
// the size-effect and mesh-dependency studies, and the 1D bar sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nlgrade/config.hpp"
#include "nlgrade/material1d.hpp"
#include "nlgrade/optimizer.hpp"
#include "nlgrade/parallel.hpp"
#include "nlgrade/postprocess.hpp"
#include "nlgrade/problems.hpp"

namespace nlgrade {

namespace detail {

inline std::string num(double v, const char* f = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw RuntimeFailure("cannot open " + p.string() + " for writing");
  return out;
}

}  // namespace detail

inline void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path,
                              const std::string& provenance) {
  auto out = detail::open_out(path);
  out << "# " << provenance << "\n";
  out << "iter,beta,compliance,volume,change\n";
  for (const auto& r : history)
    out << r.iter << "," << detail::num(r.beta) << "," << detail::num(r.compliance) << ","
        << detail::num(r.volume) << "," << detail::num(r.change) << "\n";
}

struct SingleRunResult {
  DesignProblem problem;
  FilterParams params;
  OptResult opt;
  EvaluationReport post_graded;  // thresholded, evaluated with delta_eval
  EvaluationReport post_plain;   // thresholded, evaluated with delta = 0
  double grayness = 0.0;         // final continuous design, design elements only
  double initial_compliance = 0.0;
};

/// Optimizes one problem and writes history.csv, per-stage density images,
/// final images, report.csv, final.vtk and the resolved config.
inline SingleRunResult run_single(const RunConfig& cfg) {
  cfg.validate();
  set_thread_count(cfg.threads);
  const std::string prov = "config_hash=" + config_hash(cfg);
  const auto dir = detail::prepare_dir(cfg.output_dir);

  SingleRunResult res;
  res.problem = build_problem(cfg.problem);
  res.params = cfg.resolved_filters(res.problem.mesh.h);
  const auto& mesh = res.problem.mesh;

  {
    auto out = detail::open_out(dir / "config.ini");
    out << "; " << prov << "\n" << serialize_config(cfg);
  }

  OptimizerHooks hooks;
  hooks.on_stage_start = [&](int iter, double beta, const FieldStages& st) {
    char name[96];
    std::snprintf(name, sizeof name, "stage_iter%04d_beta%g.pgm", iter, beta);
    export_density_image(st.rho, mesh, (dir / name).string(), prov);
  };
  res.opt = run_optimization(res.problem, res.params, cfg.elasticity, cfg.schedule, cfg.mma,
                             cfg.solver, hooks);
  if (!res.opt.history.empty()) res.initial_compliance = res.opt.history.front().compliance;
  write_history_csv(res.opt.history, (dir / "history.csv").string(), prov);

  const auto design_rho = res.problem.mask.restrict_to_design(res.opt.stages.rho);
  res.grayness = grayness(design_rho, mesh.element_volume());
  const double zeta_eval = cfg.effective_zeta_eval();
  res.post_graded = postprocess_design(res.opt.stages.rho, res.problem, cfg.delta_eval, zeta_eval,
                                       cfg.elasticity, res.params.kappa, cfg.solver);
  res.post_plain = postprocess_design(res.opt.stages.rho, res.problem, 0.0, zeta_eval,
                                      cfg.elasticity, res.params.kappa, cfg.solver);

  export_density_image(res.opt.stages.rho, mesh, (dir / "rho.pgm").string(), prov);
  export_density_image(res.opt.stages.alpha, mesh, (dir / "alpha.pgm").string(), prov);
  export_density_image(res.post_graded.rho, mesh, (dir / "rho_threshold.pgm").string(), prov);
  export_density_image(res.post_graded.alpha, mesh, (dir / "alpha_post.pgm").string(), prov);
  export_vtk(mesh,
             {{"mu_tilde", res.opt.stages.mu_tilde},
              {"rho", res.opt.stages.rho},
              {"rho_bar", res.opt.stages.rho_bar},
              {"alpha", res.opt.stages.alpha},
              {"rho_threshold", res.post_graded.rho},
              {"alpha_post", res.post_graded.alpha}},
             (dir / "final.vtk").string(), "nlgrade " + prov);
  write_report_csv(
      {{"optimized", res.opt.compliance, res.opt.volume, res.grayness},
       {"post_delta" + detail::num(cfg.delta_eval, "%g"), res.post_graded.compliance,
        res.post_graded.volume, res.post_graded.grayness_before},
       {"post_delta0", res.post_plain.compliance, res.post_plain.volume,
        res.post_plain.grayness_before}},
      (dir / "report.csv").string(), prov);
  return res;
}

struct SizeEffectRow {
  double scale = 0.0;
  double delta_opt = 0.0;
  double p = 0.0;
  double compliance_opt = 0.0;
  double compliance_graded = 0.0;  // post-evaluated with delta_eval
  double compliance_plain = 0.0;   // post-evaluated with delta = 0
  double c0 = 0.0;                 // delta=0-optimized, delta=0-evaluated, same scale
  int iterations = 0;
};

/// For every scale, optimizes with delta = 0 (p_plain) and delta_graded
/// (p_graded), post-evaluates both ways and normalizes by c0.
inline std::vector<SizeEffectRow> run_size_effect(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_dir(cfg.output_dir);
  std::vector<SizeEffectRow> rows;
  for (double s : cfg.scales) {
    double c0 = 0.0;
    for (double delta : {0.0, cfg.delta_graded}) {
      RunConfig run = cfg;
      run.study = Study::single;
      run.problem.scale = s;
      run.filters.delta = delta;
      run.filters.p = delta == 0.0 ? cfg.p_plain : cfg.p_graded;
      run.output_dir = (dir / ("s" + detail::num(s, "%g") + "_delta" + detail::num(delta, "%g"))).string();
      const auto r = run_single(run);
      SizeEffectRow row{s, delta, run.filters.p, r.opt.compliance, r.post_graded.compliance,
                        r.post_plain.compliance, 0.0, r.opt.iterations};
      if (delta == 0.0) c0 = r.post_plain.compliance;
      row.c0 = c0;
      rows.push_back(row);
    }
  }
  auto out = detail::open_out(dir / "size_effect.csv");
  out << "# config_hash=" << config_hash(cfg) << "\n";
  out << "scale,delta_opt,p,compliance_opt,compliance_eval_graded,compliance_eval_plain,c0,"
         "ratio_graded,ratio_plain,iterations\n";
  for (const auto& r : rows)
    out << detail::num(r.scale) << "," << detail::num(r.delta_opt) << "," << detail::num(r.p) << ","
        << detail::num(r.compliance_opt) << "," << detail::num(r.compliance_graded) << ","
        << detail::num(r.compliance_plain) << "," << detail::num(r.c0) << ","
        << detail::num(r.compliance_graded / r.c0) << "," << detail::num(r.compliance_plain / r.c0)
        << "," << r.iterations << "\n";
  return rows;
}

struct MeshDependencyRow {
  int level = 0;
  double h = 0.0;
  double delta_opt = 0.0;
  double compliance_opt = 0.0;
  double compliance_post = 0.0;  // thresholded, evaluated with delta_eval
  int iterations = 0;
};

/// Refinement study without projection: R = mesh_radius_factor * h, no beta
/// continuation, levels 0 .. levels-1, delta in {0, delta_graded}.
inline std::vector<MeshDependencyRow> run_mesh_dependency(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_dir(cfg.output_dir);
  std::vector<MeshDependencyRow> rows;
  for (int level = 0; level < cfg.levels; ++level) {
    for (double delta : {0.0, cfg.delta_graded}) {
      RunConfig run = cfg;
      run.study = Study::single;
      run.problem.level = cfg.problem.level + level;
      run.filters.projection = false;
      run.filters.delta = delta;
      run.filters.p = delta == 0.0 ? cfg.p_plain : cfg.p_graded;
      run.radius_factor = cfg.mesh_radius_factor;
      run.schedule.max_total_iterations = cfg.mesh_max_iterations;
      run.output_dir = (dir / ("level" + std::to_string(run.problem.level) + "_delta" +
                               detail::num(delta, "%g"))).string();
      const auto r = run_single(run);
      rows.push_back({run.problem.level, r.problem.mesh.h, delta, r.opt.compliance,
                      r.post_graded.compliance, r.opt.iterations});
    }
  }
  auto out = detail::open_out(dir / "mesh_dependency.csv");
  out << "# config_hash=" << config_hash(cfg) << " projection=off radius_factor="
      << detail::num(cfg.mesh_radius_factor) << "\n";
  out << "level,h,delta_opt,compliance_opt,compliance_post,iterations\n";
  for (const auto& r : rows)
    out << r.level << "," << detail::num(r.h) << "," << detail::num(r.delta_opt) << ","
        << detail::num(r.compliance_opt) << "," << detail::num(r.compliance_post) << ","
        << r.iterations << "\n";
  return rows;
}

struct Bar1DRow {
  double zeta = 0.0;
  double t = 0.0;
  double E_eff = 0.0;
  double E_surface = 0.0;
  double E_max = 0.0;
};

/// Effective-modulus sweeps (one CSV per zeta) and through-thickness profiles.
inline std::vector<Bar1DRow> run_bar1d(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_dir(cfg.output_dir);
  const std::string prov = "# config_hash=" + config_hash(cfg) + "\n";
  std::vector<Bar1DRow> rows;
  for (double zeta : cfg.bar_zetas) {
    auto out = detail::open_out(dir / ("eeff_zeta" + detail::num(zeta, "%g") + ".csv"));
    out << prov << "t,E_eff,E_surface,E_max\n";
    for (int k = 0;; ++k) {
      const double t = cfg.bar_t_min + k * cfg.bar_t_step;
      if (t > cfg.bar_t_max + 1e-9) break;
      material1d::Bar1DSpec spec{t, cfg.bar_delta, zeta, cfg.bar_E0, cfg.bar_n};
      Bar1DRow row{zeta, t, material1d::effective_modulus_1d(spec),
                   material1d::modulus_at(spec, 0.5 * t), material1d::modulus_at(spec, 0.0)};
      out << detail::num(t) << "," << detail::num(row.E_eff) << "," << detail::num(row.E_surface)
          << "," << detail::num(row.E_max) << "\n";
      rows.push_back(row);
    }
    for (double t : cfg.bar_profile_thicknesses) {
      material1d::Bar1DSpec spec{t, cfg.bar_delta, zeta, cfg.bar_E0, cfg.bar_n};
      auto prof = detail::open_out(dir / ("profile_t" + detail::num(t, "%g") + "_zeta" +
                                          detail::num(zeta, "%g") + ".csv"));
      prof << prov << "x,E\n";
      for (const auto& [x, E] : material1d::modulus_profile_1d(spec, cfg.bar_profile_points))
        prof << detail::num(x) << "," << detail::num(E) << "\n";
    }
  }
  return rows;
}

}  // namespace nlgrade
