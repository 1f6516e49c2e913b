// nlgrade command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "nlgrade/nlgrade.hpp"

namespace {

using namespace nlgrade;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  int threads = 0;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("-c,--config", a.config_path, "INI configuration file");
  sub->add_option("-s,--set", a.overrides, "override section.key=value (repeatable)");
  sub->add_option("-o,--output", a.output, "output directory (run.output_dir)");
  sub->add_option("-j,--threads", a.threads, "worker threads (run.threads)");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
  for (const auto& o : a.overrides) apply_override(cfg, o);
  if (!a.output.empty()) cfg.output_dir = a.output;
  if (a.threads > 0) cfg.threads = a.threads;
  cfg.validate();
  set_thread_count(cfg.threads);
  return cfg;
}

int cmd_optimize(const RunConfig& cfg) {
  const auto r = run_single(cfg);
  std::printf("%s: %d iterations%s, compliance %.8g, volume %.8g (bound %.8g)\n",
              r.problem.name.c_str(), r.opt.iterations, r.opt.converged ? " (converged)" : "",
              r.opt.compliance, r.opt.volume, r.problem.volume_bound);
  std::printf("post delta=%g: %.8g   post delta=0: %.8g   grayness %.4f\n", cfg.delta_eval,
              r.post_graded.compliance, r.post_plain.compliance, r.grayness);
  std::printf("artifacts in %s\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_size_effect(const RunConfig& cfg) {
  const auto rows = run_size_effect(cfg);
  std::printf("%6s %6s %14s %14s %10s\n", "s", "delta", "c(eval 0.4)", "c(eval 0)", "c/c0");
  for (const auto& r : rows)
    std::printf("%6g %6g %14.8g %14.8g %10.5f\n", r.scale, r.delta_opt, r.compliance_graded,
                r.compliance_plain, r.compliance_graded / r.c0);
  return 0;
}

int cmd_mesh_dependency(const RunConfig& cfg) {
  const auto rows = run_mesh_dependency(cfg);
  std::printf("%6s %10s %6s %14s %14s\n", "level", "h", "delta", "c(opt)", "c(post)");
  for (const auto& r : rows)
    std::printf("%6d %10.5g %6g %14.8g %14.8g\n", r.level, r.h, r.delta_opt, r.compliance_opt,
                r.compliance_post);
  return 0;
}

int cmd_bar1d(const RunConfig& cfg) {
  const auto rows = run_bar1d(cfg);
  std::printf("wrote %zu sweep rows to %s\n", rows.size(), cfg.output_dir.c_str());
  return 0;
}

int cmd_check_gradients(double beta, unsigned seed, double delta, double zeta) {
  auto setup = gradient_check_setup(beta, seed, delta, zeta);
  SolverSettings direct;
  direct.kind = SolverKind::cholesky;
  ComplianceEvaluator ev(setup.problem, setup.params, setup.elasticity, direct);
  const auto res = gradient_check(ev, setup.mu);
  std::printf("%dx%d cantilever, h=%g, R=%g, delta=%g, zeta=%g, beta=%g\n", setup.problem.mesh.nx,
              setup.problem.mesh.ny, setup.problem.mesh.h, setup.params.R, delta, zeta, beta);
  std::printf("%10s %16s %16s\n", "step", "max rel dc", "max rel dg");
  for (const auto& r : res.rows)
    std::printf("%10.0e %16.3e %16.3e\n", r.step, r.max_rel_compliance, r.max_rel_volume);
  std::printf("best: %.3e (compliance), %.3e (volume)\n", res.best_compliance, res.best_volume);
  const bool ok = res.best_compliance <= 1e-5 && res.best_volume <= 1e-7;
  std::printf("%s\n", ok ? "OK" : "MISMATCH");
  return ok ? 0 : 1;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& design, const std::string& field,
                 double delta, double zeta, bool threshold) {
  const auto problem = build_problem(cfg.problem);
  const auto vtk = read_vtk(design);
  if (vtk.nx != problem.mesh.nx || vtk.ny != problem.mesh.ny)
    throw ValidationError("evaluate: design grid " + std::to_string(vtk.nx) + "x" +
                          std::to_string(vtk.ny) + " does not match the configured problem " +
                          std::to_string(problem.mesh.nx) + "x" + std::to_string(problem.mesh.ny));
  const auto it = vtk.fields.find(field);
  if (it == vtk.fields.end()) throw ValidationError("evaluate: field '" + field + "' not in " + design);
  const double z = zeta < 0.0 ? cfg.effective_zeta_eval() : zeta;
  const auto rep = threshold ? postprocess_design(it->second, problem, delta, z, cfg.elasticity,
                                                  cfg.filters.kappa, cfg.solver)
                             : evaluate_design(it->second, problem, delta, z, cfg.elasticity,
                                               cfg.filters.kappa, cfg.solver);
  std::printf("compliance %.10g volume %.10g (delta=%g, zeta=%g)\n", rep.compliance, rep.volume,
              delta, z);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlgrade: topology optimization with nonlocal modulus grading"};
  app.require_subcommand(1);

  CommonArgs run_args, opt_args, se_args, md_args, bar_args, ev_args;
  auto* run = app.add_subcommand("run", "run the study named by run.study in the config");
  add_common(run, run_args);
  auto* optimize = app.add_subcommand("optimize", "run a single optimization");
  add_common(optimize, opt_args);
  auto* size_effect = app.add_subcommand("size-effect", "size-effect study over studies.scales");
  add_common(size_effect, se_args);
  auto* mesh_dep = app.add_subcommand("mesh-dependency", "refinement study without projection");
  add_common(mesh_dep, md_args);
  auto* bar1d = app.add_subcommand("bar1d", "1D bar effective modulus sweeps");
  add_common(bar1d, bar_args);

  auto* check = app.add_subcommand("check-gradients", "adjoint vs finite-difference gradients");
  double gc_beta = 2.0, gc_delta = 0.4, gc_zeta = 0.0;
  unsigned gc_seed = 2024;
  check->add_option("--beta", gc_beta, "projection sharpness");
  check->add_option("--seed", gc_seed, "random design seed");
  check->add_option("--delta", gc_delta, "grading radius (mm)");
  check->add_option("--zeta", gc_zeta, "fraction coefficient");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a stored design under a grading model");
  add_common(evaluate, ev_args);
  std::string ev_design, ev_field = "rho_threshold";
  double ev_delta = 0.4, ev_zeta = -1.0;
  bool ev_threshold = false;
  evaluate->add_option("--design", ev_design, "VTK file written by optimize")->required();
  evaluate->add_option("--field", ev_field, "cell field to evaluate");
  evaluate->add_option("--delta", ev_delta, "evaluation grading radius (0: ungraded)");
  evaluate->add_option("--zeta", ev_zeta, "evaluation fraction coefficient (<0: config value)");
  evaluate->add_flag("--threshold", ev_threshold, "threshold the field before evaluation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto cfg = resolve(run_args);
      switch (cfg.study) {
        case Study::single: return cmd_optimize(cfg);
        case Study::size_effect: return cmd_size_effect(cfg);
        case Study::mesh_dependency: return cmd_mesh_dependency(cfg);
        case Study::bar1d: return cmd_bar1d(cfg);
      }
    }
    if (*optimize) return cmd_optimize(resolve(opt_args));
    if (*size_effect) return cmd_size_effect(resolve(se_args));
    if (*mesh_dep) return cmd_mesh_dependency(resolve(md_args));
    if (*bar1d) return cmd_bar1d(resolve(bar_args));
    if (*check) return cmd_check_gradients(gc_beta, gc_seed, gc_delta, gc_zeta);
    if (*evaluate)
      return cmd_evaluate(resolve(ev_args), ev_design, ev_field, ev_delta, ev_zeta, ev_threshold);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
