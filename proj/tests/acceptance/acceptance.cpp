// Acceptance gate: one PASS/FAIL line per criterion. The exit status is
// nonzero if a criterion fails that is not listed with --expected-fail.
// Optimization artifacts go to ./acceptance_out (relative to the working
// directory).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nlgrade/nlgrade.hpp"

using namespace nlgrade;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const fs::path root = "acceptance_out";

// Criterion 1 -------------------------------------------------------------
Outcome gradients() {
  Timer t;
  auto s = gradient_check_setup(2.0, 2024, 0.4, 0.0);
  SolverSettings direct;
  direct.kind = SolverKind::cholesky;
  ComplianceEvaluator ev(s.problem, s.params, s.elasticity, direct);
  const auto r = gradient_check(ev, s.mu, {1e-4, 1e-5, 1e-6});
  Outcome o;
  const double secs = t.seconds();
  o.pass = s.problem.mesh.nx == 6 && s.problem.mesh.ny == 4 && r.best_compliance <= 1e-5 &&
           r.best_volume <= 1e-7 && secs < 10.0;
  o.detail = "dc " + fmt("%.2e", r.best_compliance) + " (<=1e-5), dg " + fmt("%.2e", r.best_volume) +
             " (<=1e-7), " + fmt("%.2f s", secs);
  return o;
}

// Criterion 2 -------------------------------------------------------------
Outcome bar1d() {
  Timer t;
  double worst = 0.0;
  for (double th : {0.8, 1.0, 2.0, 5.0}) {
    const double e = material1d::effective_modulus_1d({th, 0.4, 0.0, 1.0, 1000});
    worst = std::max(worst, std::abs(e / (1.0 - 0.4 / (3.0 * th)) - 1.0));
  }
  bool uniform = true;
  for (double th : {0.05, 0.3, 0.8, 1.0, 2.0, 5.0, 40.0})
    uniform = uniform && material1d::effective_modulus_1d({th, 0.4, 1.0, 1.0, 1000}) == 1.0;
  double surf = 0.0;
  for (double th : {0.8, 1.0, 2.0, 5.0})
    surf = std::max(surf, std::abs(material1d::phi_1d(0.5 * th, th, 0.4, 1000) - 0.5));
  Outcome o;
  const double secs = t.seconds();
  o.pass = worst <= 1e-3 && uniform && surf <= 2.0 / 1000 && secs < 1.0;
  o.detail = "E_eff rel err " + fmt("%.2e", worst) + ", zeta=1 exact " + (uniform ? "yes" : "no") +
             ", surface |phi-0.5| " + fmt("%.2e", surf) + ", " + fmt("%.3f s", secs);
  return o;
}

// Criterion 3 -------------------------------------------------------------
Outcome operators() {
  Timer t;
  const auto m = build_mesh(6, 4, 120, 80);
  bool exact = true;
  for (double R : {0.05 * 1.5, 0.05 * 3.0, 0.5}) {
    const auto y = build_density_operator(m, R).apply(std::vector<double>(m.num_elements(), 1.0));
    for (double v : y) exact = exact && v == 1.0;
  }
  const double delta = 0.4, h = delta / 16;
  const auto g = build_mesh(80 * h, 80 * h, 80, 80);
  const auto rb = build_grading_operator(g, delta).apply(std::vector<double>(g.num_elements(), 1.0));
  double interior = 0.0, edge = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double v = rb[g.element(i, j)];
      if (i >= 16 && i < g.nx - 16 && j >= 16 && j < g.ny - 16) interior = std::max(interior, std::abs(1.0 - v));
      const bool on_edge = (j == 0 || j == g.ny - 1 || i == 0 || i == g.nx - 1);
      const bool away_from_corner = i >= 16 && i < g.nx - 16 || (j >= 16 && j < g.ny - 16);
      if (on_edge && away_from_corner) edge = std::max(edge, std::abs(v - 0.5));
    }
  Outcome o;
  const double secs = t.seconds();
  o.pass = exact && interior <= 1e-12 && edge <= 0.05 && secs < 5.0;
  o.detail = std::string("density all-ones exact ") + (exact ? "yes" : "no") + ", interior |1-rho_bar| " +
             fmt("%.1e", interior) + ", edge |rho_bar-0.5| " + fmt("%.4f", edge) + ", " + fmt("%.2f s", secs);
  return o;
}

// Criterion 4 -------------------------------------------------------------
Eigen::Matrix<double, 8, 8> quadrature_oracle(double h, double nu) {
  // 6-point Gauss-Legendre in each direction, shape functions written in
  // physical coordinates.
  const double x6[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                        0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
  const double w6[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                        0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
  const double lam = nu / ((1 + nu) * (1 - 2 * nu)), mu = 1.0 / (2 * (1 + nu));
  Eigen::Matrix3d D;
  D << lam + 2 * mu, lam, 0, lam, lam + 2 * mu, 0, 0, 0, mu;
  const double X[4] = {0, h, h, 0}, Y[4] = {0, 0, h, h};
  Eigen::Matrix<double, 8, 8> K = Eigen::Matrix<double, 8, 8>::Zero();
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const double x = 0.5 * h * (1 + x6[a]), y = 0.5 * h * (1 + x6[b]);
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int n = 0; n < 4; ++n) {
        const double fx = 1 - std::abs(x - X[n]) / h, fy = 1 - std::abs(y - Y[n]) / h;
        const double dx = (X[n] > 0 ? 1.0 : -1.0) / h * fy, dy = (Y[n] > 0 ? 1.0 : -1.0) / h * fx;
        B(0, 2 * n) = dx;
        B(1, 2 * n + 1) = dy;
        B(2, 2 * n) = dy;
        B(2, 2 * n + 1) = dx;
      }
      K += B.transpose() * D * B * (w6[a] * w6[b] * 0.25 * h * h);
    }
  return K;
}

Outcome fem() {
  const double h = 1.0, nu = 0.3;
  const auto K = unit_element_stiffness(h, nu);
  const double sym = (K - K.transpose()).cwiseAbs().maxCoeff();
  Eigen::Matrix<double, 8, 1> tx, ty, rot;
  const double X[4] = {0, h, h, 0}, Y[4] = {0, 0, h, h};
  for (int n = 0; n < 4; ++n) {
    tx.segment<2>(2 * n) << 1, 0;
    ty.segment<2>(2 * n) << 0, 1;
    rot.segment<2>(2 * n) << -Y[n], X[n];
  }
  const double rigid = std::max({(K * tx).lpNorm<Eigen::Infinity>(), (K * ty).lpNorm<Eigen::Infinity>(),
                                 (K * rot).lpNorm<Eigen::Infinity>()});
  const double quad = (K - quadrature_oracle(h, nu)).cwiseAbs().maxCoeff();

  ProblemSpec spec;
  spec.elements_per_mm = 1.6;  // 24x16
  spec.nondesign = false;
  const auto p = build_cantilever(spec);
  std::vector<double> alpha(static_cast<std::size_t>(p.mesh.num_elements()));
  for (std::size_t e = 0; e < alpha.size(); ++e) alpha[e] = 0.02 + 0.98 * ((e * 7919) % 97) / 96.0;
  FemModel model(p.mesh, p.bcs, {}, 1e-9);
  const auto u = solve_state(model, alpha);
  const auto en = model.element_energies(u);
  double s = 0.0;
  for (std::size_t e = 0; e < alpha.size(); ++e) s += elemental_modulus(alpha[e], 1e-9, 1.0) * en[e];
  const double energy = std::abs(model.compliance(u) / s - 1.0);

  Outcome o;
  o.pass = p.mesh.nx == 24 && p.mesh.ny == 16 && sym <= 1e-14 && rigid <= 1e-12 && quad <= 1e-12 &&
           energy <= 1e-8;
  o.detail = "sym " + fmt("%.1e", sym) + ", rigid " + fmt("%.1e", rigid) + ", quadrature " + fmt("%.1e", quad) +
             ", energy identity " + fmt("%.1e", energy);
  return o;
}

// Criteria 5 and 6 --------------------------------------------------------
RunConfig cantilever_config(double scale, double delta, double p, const std::string& tag) {
  RunConfig c;
  c.problem.kind = ProblemKind::cantilever;
  c.problem.scale = scale;
  c.problem.elements_per_mm = 8;  // 120x80 for any scale
  c.radius_factor = 10;
  c.filters.delta = delta;
  c.filters.zeta = 0.0;
  c.filters.eta = 0.5;
  c.filters.p = p;
  c.delta_eval = 0.4;
  c.output_dir = (root / tag).string();
  return c;
}

struct Pair {
  SingleRunResult plain;   // delta = 0, p = 3
  SingleRunResult graded;  // delta = 0.4, p = 2.5
  double seconds_graded = 0.0;
};

Pair run_pair(double s) {
  Pair pr;
  const std::string tag = "cantilever_s" + fmt("%g", s);
  pr.plain = run_single(cantilever_config(s, 0.0, 3.0, tag + "_delta0"));
  Timer t;
  pr.graded = run_single(cantilever_config(s, 0.4, 2.5, tag + "_delta0.4"));
  pr.seconds_graded = t.seconds();
  return pr;
}

Outcome desk_benchmark(const Pair& s1) {
  const auto& r = s1.graded;
  const double vol_err = (r.opt.volume - r.problem.volume_bound) / r.problem.volume_bound;
  const double drop = 1.0 - r.opt.compliance / r.initial_compliance;
  Outcome o;
  o.pass = r.problem.mesh.nx == 120 && r.problem.mesh.ny == 80 && vol_err <= 1e-3 && r.grayness <= 0.05 &&
           drop >= 0.30 && s1.seconds_graded < 1800.0;
  o.detail = "volume excess " + fmt("%.2e", vol_err) + " (<=1e-3), grayness " + fmt("%.4f", r.grayness) +
             " (<=0.05), compliance " + fmt("%.3f", r.initial_compliance) + " -> " + fmt("%.3f", r.opt.compliance) +
             " (drop " + fmt("%.1f%%", 100 * drop) + "), " + std::to_string(r.opt.iterations) + " iters, " +
             fmt("%.0f s", s1.seconds_graded);
  return o;
}

Outcome paper_trend(const std::vector<std::pair<double, Pair>>& runs) {
  // Post-evaluated with thresholding + delta = 0.4 grading.
  std::vector<double> gaps;
  std::ostringstream d;
  bool ordering = true;
  for (const auto& [s, pr] : runs) {
    const double c_plain = pr.plain.post_graded.compliance;
    const double c_graded = pr.graded.post_graded.compliance;
    const double c0 = pr.plain.post_plain.compliance;
    const double gap = (c_plain - c_graded) / c0;
    gaps.push_back(gap);
    if (s == 1.0) ordering = c_graded <= 1.01 * c_plain;
    d << "s=" << s << ": c(delta0-opt)=" << fmt("%.3f", c_plain) << " c(delta0.4-opt)=" << fmt("%.3f", c_graded)
      << " gap/c0=" << fmt("%+.4f", gap) << "; ";
  }
  int inversions = 0;
  for (std::size_t k = 1; k < gaps.size(); ++k) inversions += gaps[k] > gaps[k - 1];
  Outcome o;
  o.pass = ordering && inversions <= 1 && gaps.back() < gaps.front();
  d << "inversions " << inversions;
  o.detail = d.str();
  return o;
}

// Criterion 7 -------------------------------------------------------------
Outcome bridge_symmetry() {
  RunConfig c;
  c.problem.kind = ProblemKind::bridge;
  c.problem.elements_per_mm = 8;  // 160x80
  c.filters.delta = 0.4;
  c.filters.p = 2.5;
  c.mma.move = 0.05;  // as in configs/bridge_desk.ini
  c.output_dir = (root / "bridge").string();
  const auto problem = build_problem(c.problem);
  const auto& m = problem.mesh;

  // FEM under a mirror-symmetric alpha
  std::vector<double> alpha(static_cast<std::size_t>(m.num_elements()));
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i < m.nx; ++i) {
      const int ii = std::min(i, m.nx - 1 - i);
      alpha[m.element(i, j)] = 0.05 + 0.95 * ((ii * 31 + j * 17) % 23) / 22.0;
    }
  FemModel model(m, problem.bcs, c.elasticity, 1e-9);
  const auto u = solve_state(model, alpha);
  double fem_err = 0.0, umax = u.lpNorm<Eigen::Infinity>();
  for (int n = 0; n < m.num_nodes(); ++n) {
    const int k = mirror_node(m, n);
    fem_err = std::max(fem_err, std::abs(u[2 * n] + u[2 * k]));
    fem_err = std::max(fem_err, std::abs(u[2 * n + 1] - u[2 * k + 1]));
  }
  fem_err /= umax;

  const auto r = run_single(c);
  double rho_err = 0.0;
  for (int e = 0; e < m.num_elements(); ++e)
    rho_err = std::max(rho_err, std::abs(r.opt.stages.rho[e] - r.opt.stages.rho[mirror_element(m, e)]));
  Outcome o;
  o.pass = fem_err <= 1e-8 && rho_err <= 1e-3;
  o.detail = "FEM mirror error " + fmt("%.1e", fem_err) + " (<=1e-8, relative to max|u|), rho mirror error " +
             fmt("%.1e", rho_err) + " (<=1e-3), compliance " + fmt("%.3f", r.opt.compliance);
  return o;
}

// Criterion 8 -------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  RunConfig c;
  c.problem.elements_per_mm = 4;  // 60x40 cantilever with solid patches
  c.filters.delta = 0.4;
  std::vector<fs::path> dirs;
  for (int threads : {1, 4, 1}) {
    c.threads = threads;
    c.output_dir = (root / ("determinism_" + std::to_string(dirs.size()) + "_t" + std::to_string(threads))).string();
    dirs.emplace_back(c.output_dir);
    (void)run_single(c);
  }
  set_thread_count(1);
  int compared = 0;
  bool same = true;
  std::string diff;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    const auto name = e.path().filename().string();
    if (name == "config.ini") continue;  // records run.threads
    if (e.path().extension() != ".csv" && e.path().extension() != ".pgm") continue;
    for (std::size_t k = 1; k < dirs.size(); ++k) {
      ++compared;
      if (slurp(e.path()) != slurp(dirs[k] / name)) {
        same = false;
        diff = name;
      }
    }
  }
  Outcome o;
  o.pass = same && compared >= 2 * 10;
  o.detail = std::to_string(compared) + " file comparisons (threads 1, 4, 1)" + (same ? ", all byte-identical" : ", differs: " + diff);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> expected_fail;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--expected-fail" && a + 1 < argc) {
      std::stringstream list(argv[++a]);
      std::string id;
      while (std::getline(list, id, ',')) expected_fail.push_back(std::stoi(id));
    } else {
      std::fprintf(stderr, "usage: acceptance [--expected-fail 7[,...]]\n");
      return 2;
    }
  }
  fs::create_directories(root);
  int failed = 0, unexpected = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    const bool known = std::find(expected_fail.begin(), expected_fail.end(), id) != expected_fail.end();
    std::printf("%s criterion %d (%s): %s%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                !o.pass && known ? " [expected failure]" : "");
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
    unexpected += o.pass || known ? 0 : 1;
  };
  auto guarded = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    try {
      report(id, name, fn());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "gradient correctness", gradients);
  guarded(2, "1D analytic reproduction", bar1d);
  guarded(3, "kernel and operator properties", operators);
  guarded(4, "FEM verification", fem);

  std::vector<std::pair<double, Pair>> runs;
  try {
    for (double s : {1.0, 2.0, 3.0}) runs.emplace_back(s, run_pair(s));
    report(5, "desk cantilever benchmark", desk_benchmark(runs.front().second));
    report(6, "size-effect trend", paper_trend(runs));
  } catch (const std::exception& e) {
    report(5, "desk cantilever benchmark", {false, std::string("exception: ") + e.what()});
    report(6, "size-effect trend", {false, "not evaluated"});
  }

  guarded(7, "bridge symmetry", bridge_symmetry);
  guarded(8, "determinism", determinism);

  std::printf("%d of 8 criteria failed (%d unexpected)\n", failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
