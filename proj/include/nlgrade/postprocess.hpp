#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/fem.hpp"
#include "nlgrade/filters.hpp"
#include "nlgrade/problem.hpp"

namespace nlgrade {

/// Binarizes rho so the material volume is kept. The cut level tau is found
/// by bisection; elements tied inside the final bracket are switched on in
/// ascending index order while that brings the volume closer to the target.
/// Non-design elements are always solid.
inline std::vector<double> volume_preserving_threshold(std::span<const double> rho,
                                                       const StructuredMesh& mesh,
                                                       const ElementMask& mask) {
  require(static_cast<int>(rho.size()) == mesh.num_elements(), "postprocess: rho length mismatch");
  const double v = mesh.element_volume();
  const auto& design = mask.design_elements();
  double target = 0.0;
  for (int e : design) target += v * rho[e];

  auto volume_at = [&](double tau) {
    double s = 0.0;
    for (int e : design)
      if (rho[e] >= tau) s += v;
    return s;
  };

  double lo = 0.0, hi = 2.0;  // volume_at(lo) >= target > volume_at(hi) unless target == 0
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (volume_at(mid) >= target)
      lo = mid;
    else
      hi = mid;
  }

  std::vector<double> out(rho.size(), 1.0);
  double vol = 0.0;
  for (int e : design) {
    out[e] = rho[e] >= hi ? 1.0 : 0.0;
    vol += out[e] * v;
  }
  for (int e : design) {
    if (rho[e] >= lo && rho[e] < hi && std::abs(vol + v - target) < std::abs(vol - target)) {
      out[e] = 1.0;
      vol += v;
    }
  }
  return out;
}

struct EvaluationReport {
  std::vector<double> rho;  // binary
  std::vector<double> rho_bar;
  std::vector<double> alpha;
  std::vector<double> modulus;
  double compliance = 0.0;
  double volume = 0.0;
  double grayness_before = 0.0;
  double delta = 0.0;
  double zeta = 0.0;
};

/// Compliance of a binary design under the grading model with radius
/// delta_eval (0: ungraded). With binary rho the SIMP exponent drops out:
/// alpha = rho [zeta + (1 - zeta) rho_bar].
inline EvaluationReport evaluate_design(std::span<const double> binary_rho,
                                        const DesignProblem& problem, double delta_eval,
                                        double zeta_eval, const ElasticityParams& elasticity,
                                        double kappa = 1e-9, const SolverSettings& solver = {}) {
  const auto& mesh = problem.mesh;
  require(static_cast<int>(binary_rho.size()) == mesh.num_elements(),
          "postprocess: design length mismatch");
  require(delta_eval >= 0.0, "postprocess: evaluation delta must be >= 0");
  require(zeta_eval >= 0.0 && zeta_eval <= 1.0, "postprocess: evaluation zeta must lie in [0,1]");
  EvaluationReport r;
  r.delta = delta_eval;
  r.zeta = zeta_eval;
  r.rho.assign(binary_rho.begin(), binary_rho.end());
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (!problem.mask.is_design(e)) r.rho[e] = 1.0;
  if (delta_eval > 0.0) {
    const auto G = build_grading_operator(mesh, delta_eval);
    r.rho_bar = G.apply(r.rho);
    r.alpha.resize(r.rho.size());
    for (std::size_t e = 0; e < r.rho.size(); ++e)
      r.alpha[e] = r.rho[e] * (zeta_eval + (1.0 - zeta_eval) * r.rho_bar[e]);
  } else {
    r.rho_bar = r.rho;
    r.alpha = r.rho;
  }
  r.modulus.resize(r.alpha.size());
  for (std::size_t e = 0; e < r.alpha.size(); ++e)
    r.modulus[e] = elemental_modulus(r.alpha[e], kappa, elasticity.E0);
  FemModel model(mesh, problem.bcs, elasticity, kappa, solver);
  const auto u = solve_state(model, r.alpha);
  r.compliance = model.compliance(u);
  for (double x : r.rho) r.volume += x * mesh.element_volume();
  return r;
}

/// Thresholds a continuous design, then evaluates it.
inline EvaluationReport postprocess_design(std::span<const double> rho,
                                           const DesignProblem& problem, double delta_eval,
                                           double zeta_eval, const ElasticityParams& elasticity,
                                           double kappa = 1e-9, const SolverSettings& solver = {}) {
  const auto binary = volume_preserving_threshold(rho, problem.mesh, problem.mask);
  auto r = evaluate_design(binary, problem, delta_eval, zeta_eval, elasticity, kappa, solver);
  std::vector<double> design_rho = problem.mask.restrict_to_design({rho.begin(), rho.end()});
  r.grayness_before = grayness(design_rho, problem.mesh.element_volume());
  return r;
}

// Exports ----------------------------------------------------------------------

/// Binary PGM, one pixel per element, top image row = top element row.
inline void export_density_image(std::span<const double> field, const StructuredMesh& mesh,
                                 const std::string& path, const std::string& comment = {}) {
  require(static_cast<int>(field.size()) == mesh.num_elements(), "postprocess: field length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("postprocess: cannot open " + path + " for writing");
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << mesh.nx << " " << mesh.ny << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(mesh.nx));
  for (int j = mesh.ny - 1; j >= 0; --j) {
    for (int i = 0; i < mesh.nx; ++i) {
      const double v = std::clamp(field[mesh.element(i, j)], 0.0, 1.0);
      row[i] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw RuntimeFailure("postprocess: write failed for " + path);
}

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;  // row-major, top row first
};

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("postprocess: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw RuntimeFailure("postprocess: " + path + " is not a binary PGM");
  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
      in >> std::ws;
    }
    int v = 0;
    in >> v;
    return v;
  };
  GrayImage img;
  img.width = next_int();
  img.height = next_int();
  const int maxval = next_int();
  in.get();
  if (maxval != 255) throw RuntimeFailure("postprocess: unsupported PGM maxval");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw RuntimeFailure("postprocess: truncated PGM " + path);
  return img;
}

using NamedField = std::pair<std::string, std::vector<double>>;

/// Legacy VTK structured grid (ASCII) with one scalar cell array per field.
inline void export_vtk(const StructuredMesh& mesh, const std::vector<NamedField>& fields,
                       const std::string& path, const std::string& title = "nlgrade") {
  for (const auto& [name, values] : fields) {
    require(!name.empty() && name.find_first_of(" \t\n") == std::string::npos,
            "postprocess: VTK field names must be non-empty without whitespace");
    require(static_cast<int>(values.size()) == mesh.num_elements(),
            "postprocess: VTK field '" + name + "' length mismatch");
  }
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("postprocess: cannot open " + path + " for writing");
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << mesh.nx + 1 << " " << mesh.ny + 1 << " 1\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const auto p = mesh.node_position(n);
    out << num(p.x) << " " << num(p.y) << " 0\n";
  }
  if (!fields.empty()) {
    out << "CELL_DATA " << mesh.num_elements() << "\n";
    for (const auto& [name, values] : fields) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : values) out << num(v) << "\n";
    }
  }
  if (!out) throw RuntimeFailure("postprocess: write failed for " + path);
}

struct VtkCellData {
  int nx = 0;
  int ny = 0;
  std::string title;
  std::map<std::string, std::vector<double>> fields;
};

/// Reads files written by export_vtk.
inline VtkCellData read_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("postprocess: cannot open " + path);
  VtkCellData d;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# vtk DataFile", 0) != 0) throw RuntimeFailure("postprocess: " + path + " is not a VTK file");
  std::getline(in, d.title);
  std::string tok;
  while (in >> tok) {
    if (tok == "DIMENSIONS") {
      int nz = 0;
      in >> d.nx >> d.ny >> nz;
      d.nx -= 1;
      d.ny -= 1;
    } else if (tok == "POINTS") {
      long n = 0;
      std::string type;
      in >> n >> type;
      double skip;
      for (long k = 0; k < 3 * n; ++k) in >> skip;
    } else if (tok == "CELL_DATA") {
      long n = 0;
      in >> n;
      std::string kw, name, type, lt, lname;
      int comps = 1;
      while (in >> kw) {
        if (kw != "SCALARS") throw RuntimeFailure("postprocess: unexpected token '" + kw + "' in " + path);
        in >> name >> type >> comps >> lt >> lname;
        std::vector<double> values(static_cast<std::size_t>(n));
        for (auto& v : values) {
          std::string s;
          in >> s;
          v = std::strtod(s.c_str(), nullptr);
        }
        if (!in) throw RuntimeFailure("postprocess: truncated field '" + name + "' in " + path);
        d.fields[name] = std::move(values);
      }
    }
  }
  return d;
}

struct ReportRow {
  std::string name;
  double compliance = 0.0;
  double volume = 0.0;
  double grayness = 0.0;
};

inline void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path,
                             const std::string& provenance = {}) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("postprocess: cannot open " + path + " for writing");
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "name,compliance,volume,grayness\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.6g\n", r.name.c_str(), r.compliance, r.volume,
                  r.grayness);
    out << buf;
  }
}

}  // namespace nlgrade
