#pragma once

// Run configuration. On disk it is INI text with one section per module:
//
//   [run]         study, output_dir, threads
//   [problem]     kind, scale, level, elements_per_mm, volume_fraction, nondesign, traction
//   [filters]     radius_factor (R = radius_factor * h), delta, eta, zeta, p, kappa, projection
//   [fem]         E0, nu, solver (auto|cholesky|cg), cg_tolerance
//   [optimizer]   beta_values, iterations_per_stage, max_iterations, tolerance,
//                 move, asy_init, asy_decr, asy_incr, dual_tolerance
//   [postprocess] delta_eval, zeta_eval (negative: use filters.zeta)
//   [studies]     scales, levels, delta_graded, p_plain, p_graded, mesh_radius_factor,
//                 mesh_max_iterations
//   [bar1d]       delta, E0, n, t_min, t_max, t_step, zetas, profile_thicknesses, profile_points
//
// Lists are comma separated. Missing keys keep their defaults; unknown keys
// are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/fem.hpp"
#include "nlgrade/filters.hpp"
#include "nlgrade/mma.hpp"
#include "nlgrade/optimizer.hpp"
#include "nlgrade/problems.hpp"

namespace nlgrade {

enum class Study { single, size_effect, mesh_dependency, bar1d };

inline const char* to_string(Study s) {
  switch (s) {
    case Study::single: return "single";
    case Study::size_effect: return "size-effect";
    case Study::mesh_dependency: return "mesh-dependency";
    case Study::bar1d: return "bar1d";
  }
  return "?";
}

inline Study parse_study(const std::string& s) {
  if (s == "single") return Study::single;
  if (s == "size-effect") return Study::size_effect;
  if (s == "mesh-dependency") return Study::mesh_dependency;
  if (s == "bar1d") return Study::bar1d;
  throw ValidationError("config: unknown study '" + s + "'");
}

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::automatic: return "auto";
    case SolverKind::cholesky: return "cholesky";
    case SolverKind::cg: return "cg";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "auto") return SolverKind::automatic;
  if (s == "cholesky") return SolverKind::cholesky;
  if (s == "cg") return SolverKind::cg;
  throw ValidationError("config: unknown solver '" + s + "' (expected auto, cholesky or cg)");
}

struct RunConfig {
  // [run]
  Study study = Study::single;
  std::string output_dir = "out";
  int threads = 1;
  // [problem]
  ProblemSpec problem{};
  // [filters]
  double radius_factor = 10.0;
  FilterParams filters{};
  // [fem]
  ElasticityParams elasticity{};
  SolverSettings solver{};
  // [optimizer]
  ContinuationSchedule schedule{};
  MmaSettings mma{};
  // [postprocess]
  double delta_eval = 0.4;
  double zeta_eval = -1.0;
  // [studies]
  std::vector<double> scales{1, 2, 3, 4};
  int levels = 3;
  double delta_graded = 0.4;
  double p_plain = 3.0;
  double p_graded = 2.5;
  double mesh_radius_factor = 1.3;
  int mesh_max_iterations = 300;
  // [bar1d]
  double bar_delta = 0.4;
  double bar_E0 = 1.0;
  int bar_n = 1000;
  double bar_t_min = 0.1;
  double bar_t_max = 3.0;
  double bar_t_step = 0.1;
  std::vector<double> bar_zetas{0, 0.25, 0.5, 0.75, 1};
  std::vector<double> bar_profile_thicknesses{0.2, 0.4, 0.8, 1.0, 2.0};
  int bar_profile_points = 201;

  RunConfig() { filters.p = 2.5; }

  [[nodiscard]] double effective_zeta_eval() const { return zeta_eval < 0.0 ? filters.zeta : zeta_eval; }

  /// Filter parameters with R resolved against the problem's element size.
  [[nodiscard]] FilterParams resolved_filters(double h) const {
    FilterParams f = filters;
    f.R = radius_factor * h;
    return f;
  }

  void validate() const {
    require(threads >= 1, "config: run.threads must be >= 1");
    require(!output_dir.empty(), "config: run.output_dir must not be empty");
    problem.validate();
    require(radius_factor > 0.0, "config: filters.radius_factor must be positive");
    FilterParams f = filters;
    f.R = 1.0;
    f.validate();
    elasticity.validate();
    schedule.validate();
    mma.validate();
    require(delta_eval >= 0.0, "config: postprocess.delta_eval must be >= 0");
    require(zeta_eval <= 1.0, "config: postprocess.zeta_eval must be <= 1");
    require(!scales.empty(), "config: studies.scales must not be empty");
    for (double s : scales) require(s > 0.0, "config: studies.scales must be positive");
    require(levels >= 1, "config: studies.levels must be >= 1");
    require(delta_graded > 0.0, "config: studies.delta_graded must be positive");
    require(p_plain >= 1.0 && p_graded >= 1.0, "config: studies p values must be >= 1");
    require(mesh_radius_factor > 0.0, "config: studies.mesh_radius_factor must be positive");
    require(mesh_max_iterations >= 1, "config: studies.mesh_max_iterations must be >= 1");
    require(bar_delta > 0.0 && bar_E0 > 0.0 && bar_n >= 2, "config: invalid bar1d parameters");
    require(bar_t_min > 0.0 && bar_t_max >= bar_t_min && bar_t_step > 0.0,
            "config: invalid bar1d thickness sweep");
    for (double z : bar_zetas) require(z >= 0.0 && z <= 1.0, "config: bar1d.zetas must lie in [0,1]");
    for (double t : bar_profile_thicknesses) require(t > 0.0, "config: bar1d profile thicknesses must be positive");
    require(bar_profile_points >= 2, "config: bar1d.profile_points must be >= 2");
  }

  bool operator==(const RunConfig& o) const;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ",";
    s += fmt_double(v[k]);
  }
  return s;
}

inline double parse_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config: " + key + " expects a number, got '" + s + "'");
  }
  if (s.find_first_not_of(" \t", pos) != std::string::npos)
    throw ValidationError("config: " + key + " expects a number, got '" + s + "'");
  return v;
}

inline int parse_int(const std::string& key, const std::string& s) {
  const double v = parse_double(key, s);
  if (v != static_cast<double>(static_cast<long long>(v)))
    throw ValidationError("config: " + key + " expects an integer, got '" + s + "'");
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("config: " + key + " expects true/false, got '" + s + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (item.find_first_not_of(" \t") != std::string::npos) out.push_back(parse_double(key, item));
  return out;
}

}  // namespace detail

inline boost::property_tree::ptree to_ptree(const RunConfig& c) {
  using detail::fmt_double;
  using detail::fmt_list;
  boost::property_tree::ptree pt;
  pt.put("run.study", to_string(c.study));
  pt.put("run.output_dir", c.output_dir);
  pt.put("run.threads", c.threads);

  pt.put("problem.kind", to_string(c.problem.kind));
  pt.put("problem.scale", fmt_double(c.problem.scale));
  pt.put("problem.level", c.problem.level);
  pt.put("problem.elements_per_mm", fmt_double(c.problem.elements_per_mm));
  pt.put("problem.volume_fraction", fmt_double(c.problem.volume_fraction));
  pt.put("problem.nondesign", c.problem.nondesign ? "true" : "false");
  pt.put("problem.traction", fmt_double(c.problem.traction));

  pt.put("filters.radius_factor", fmt_double(c.radius_factor));
  pt.put("filters.delta", fmt_double(c.filters.delta));
  pt.put("filters.eta", fmt_double(c.filters.eta));
  pt.put("filters.zeta", fmt_double(c.filters.zeta));
  pt.put("filters.p", fmt_double(c.filters.p));
  pt.put("filters.kappa", fmt_double(c.filters.kappa));
  pt.put("filters.projection", c.filters.projection ? "true" : "false");

  pt.put("fem.E0", fmt_double(c.elasticity.E0));
  pt.put("fem.nu", fmt_double(c.elasticity.nu));
  pt.put("fem.solver", to_string(c.solver.kind));
  pt.put("fem.cg_tolerance", fmt_double(c.solver.cg_tolerance));

  pt.put("optimizer.beta_values", fmt_list(c.schedule.beta_values));
  pt.put("optimizer.iterations_per_stage", c.schedule.iterations_per_stage);
  pt.put("optimizer.max_iterations", c.schedule.max_total_iterations);
  pt.put("optimizer.tolerance", fmt_double(c.schedule.tolerance));
  pt.put("optimizer.move", fmt_double(c.mma.move));
  pt.put("optimizer.asy_init", fmt_double(c.mma.asy_init));
  pt.put("optimizer.asy_decr", fmt_double(c.mma.asy_decr));
  pt.put("optimizer.asy_incr", fmt_double(c.mma.asy_incr));
  pt.put("optimizer.dual_tolerance", fmt_double(c.mma.dual_tolerance));

  pt.put("postprocess.delta_eval", fmt_double(c.delta_eval));
  pt.put("postprocess.zeta_eval", fmt_double(c.zeta_eval));

  pt.put("studies.scales", fmt_list(c.scales));
  pt.put("studies.levels", c.levels);
  pt.put("studies.delta_graded", fmt_double(c.delta_graded));
  pt.put("studies.p_plain", fmt_double(c.p_plain));
  pt.put("studies.p_graded", fmt_double(c.p_graded));
  pt.put("studies.mesh_radius_factor", fmt_double(c.mesh_radius_factor));
  pt.put("studies.mesh_max_iterations", c.mesh_max_iterations);

  pt.put("bar1d.delta", fmt_double(c.bar_delta));
  pt.put("bar1d.E0", fmt_double(c.bar_E0));
  pt.put("bar1d.n", c.bar_n);
  pt.put("bar1d.t_min", fmt_double(c.bar_t_min));
  pt.put("bar1d.t_max", fmt_double(c.bar_t_max));
  pt.put("bar1d.t_step", fmt_double(c.bar_t_step));
  pt.put("bar1d.zetas", fmt_list(c.bar_zetas));
  pt.put("bar1d.profile_thicknesses", fmt_list(c.bar_profile_thicknesses));
  pt.put("bar1d.profile_points", c.bar_profile_points);
  return pt;
}

/// Applies one "section.key=value" assignment.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const auto& v = value;
  if (key == "run.study") c.study = parse_study(v);
  else if (key == "run.output_dir") c.output_dir = v;
  else if (key == "run.threads") c.threads = parse_int(key, v);
  else if (key == "problem.kind") c.problem.kind = parse_problem_kind(v);
  else if (key == "problem.scale") c.problem.scale = parse_double(key, v);
  else if (key == "problem.level") c.problem.level = parse_int(key, v);
  else if (key == "problem.elements_per_mm") c.problem.elements_per_mm = parse_double(key, v);
  else if (key == "problem.volume_fraction") c.problem.volume_fraction = parse_double(key, v);
  else if (key == "problem.nondesign") c.problem.nondesign = parse_bool(key, v);
  else if (key == "problem.traction") c.problem.traction = parse_double(key, v);
  else if (key == "filters.radius_factor") c.radius_factor = parse_double(key, v);
  else if (key == "filters.delta") c.filters.delta = parse_double(key, v);
  else if (key == "filters.eta") c.filters.eta = parse_double(key, v);
  else if (key == "filters.zeta") c.filters.zeta = parse_double(key, v);
  else if (key == "filters.p") c.filters.p = parse_double(key, v);
  else if (key == "filters.kappa") c.filters.kappa = parse_double(key, v);
  else if (key == "filters.projection") c.filters.projection = parse_bool(key, v);
  else if (key == "fem.E0") c.elasticity.E0 = parse_double(key, v);
  else if (key == "fem.nu") c.elasticity.nu = parse_double(key, v);
  else if (key == "fem.solver") c.solver.kind = parse_solver(v);
  else if (key == "fem.cg_tolerance") c.solver.cg_tolerance = parse_double(key, v);
  else if (key == "optimizer.beta_values") c.schedule.beta_values = parse_list(key, v);
  else if (key == "optimizer.iterations_per_stage") c.schedule.iterations_per_stage = parse_int(key, v);
  else if (key == "optimizer.max_iterations") c.schedule.max_total_iterations = parse_int(key, v);
  else if (key == "optimizer.tolerance") c.schedule.tolerance = parse_double(key, v);
  else if (key == "optimizer.move") c.mma.move = parse_double(key, v);
  else if (key == "optimizer.asy_init") c.mma.asy_init = parse_double(key, v);
  else if (key == "optimizer.asy_decr") c.mma.asy_decr = parse_double(key, v);
  else if (key == "optimizer.asy_incr") c.mma.asy_incr = parse_double(key, v);
  else if (key == "optimizer.dual_tolerance") c.mma.dual_tolerance = parse_double(key, v);
  else if (key == "postprocess.delta_eval") c.delta_eval = parse_double(key, v);
  else if (key == "postprocess.zeta_eval") c.zeta_eval = parse_double(key, v);
  else if (key == "studies.scales") c.scales = parse_list(key, v);
  else if (key == "studies.levels") c.levels = parse_int(key, v);
  else if (key == "studies.delta_graded") c.delta_graded = parse_double(key, v);
  else if (key == "studies.p_plain") c.p_plain = parse_double(key, v);
  else if (key == "studies.p_graded") c.p_graded = parse_double(key, v);
  else if (key == "studies.mesh_radius_factor") c.mesh_radius_factor = parse_double(key, v);
  else if (key == "studies.mesh_max_iterations") c.mesh_max_iterations = parse_int(key, v);
  else if (key == "bar1d.delta") c.bar_delta = parse_double(key, v);
  else if (key == "bar1d.E0") c.bar_E0 = parse_double(key, v);
  else if (key == "bar1d.n") c.bar_n = parse_int(key, v);
  else if (key == "bar1d.t_min") c.bar_t_min = parse_double(key, v);
  else if (key == "bar1d.t_max") c.bar_t_max = parse_double(key, v);
  else if (key == "bar1d.t_step") c.bar_t_step = parse_double(key, v);
  else if (key == "bar1d.zetas") c.bar_zetas = parse_list(key, v);
  else if (key == "bar1d.profile_thicknesses") c.bar_profile_thicknesses = parse_list(key, v);
  else if (key == "bar1d.profile_points") c.bar_profile_points = parse_int(key, v);
  else throw ValidationError("config: unknown key '" + key + "'");
}

/// Parses "section.key=value".
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("config: override '" + assignment + "' is not of the form section.key=value");
  set_config_value(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline RunConfig from_ptree(const boost::property_tree::ptree& pt, RunConfig base = {}) {
  for (const auto& [section, body] : pt) {
    if (body.empty() && !body.data().empty())
      throw ValidationError("config: key '" + section + "' must be inside a section");
    for (const auto& [key, value] : body) set_config_value(base, section + "." + key, value.data());
  }
  return base;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return from_ptree(pt);
}

inline RunConfig load_config(const std::string& path) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return from_ptree(pt);
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  boost::property_tree::write_ini(out, to_ptree(c));
  return out.str();
}

inline bool RunConfig::operator==(const RunConfig& o) const {
  return serialize_config(*this) == serialize_config(o);
}

/// FNV-1a over the canonical serialization, as 16 hex digits. The output
/// directory and thread count do not affect results and are left out.
inline std::string config_hash(const RunConfig& c) {
  RunConfig k = c;
  k.output_dir = "-";
  k.threads = 1;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(k)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nlgrade
