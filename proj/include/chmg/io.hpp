#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chmg/errors.hpp"
#include "chmg/mesh.hpp"
#include "chmg/stepper.hpp"

namespace chmg {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ExperimentKind { single_run, h_sweep, tau_sweep, coupled_sweep, spectrum_sweep };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::single_run: return "single-run";
    case ExperimentKind::h_sweep: return "h-sweep";
    case ExperimentKind::tau_sweep: return "tau-sweep";
    case ExperimentKind::coupled_sweep: return "coupled-sweep";
    case ExperimentKind::spectrum_sweep: return "spectrum-sweep";
  }
  return "?";
}

/// One experiment: a base RunConfig plus the parameter lists a sweep walks.
/// Empty lists fall back to the corresponding base value.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::single_run;
  RunConfig base;
  std::vector<int> levels;
  std::vector<double> taus;
  std::vector<double> epsilons;
  double coupled_tau_factor = 0.002;  // tau = factor * h / sqrt(2)
  std::string output_dir = ".";
  bool timing = true;
  int snapshot_every = 0;

  std::vector<int> level_list() const { return levels.empty() ? std::vector<int>{base.level} : levels; }
  std::vector<double> tau_list() const { return taus.empty() ? std::vector<double>{base.tau} : taus; }
  std::vector<double> eps_list() const { return epsilons.empty() ? std::vector<double>{base.eps} : epsilons; }
};

/// A single point of a sweep, in scheduling order.
struct SweepPoint {
  int index = 0;
  RunConfig config;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string where(int line) { return line > 0 ? "line " + std::to_string(line) : "command line"; }

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, int line, const std::string& why) {
  throw ConfigError(where(line) + ": key '" + key + "': " + why + " (got '" + value + "')");
}

inline double parse_plain_double(const std::string& key, const std::string& s, int line) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(key, s, line, "not a number");
  return v;
}

/// Number or quotient "a/b" (as in 0.002/64).
inline double parse_number(const std::string& key, const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) bad_value(key, raw, line, "empty value");
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_plain_double(key, s, line);
  const double num = parse_plain_double(key, trim(s.substr(0, slash)), line);
  const double den = parse_plain_double(key, trim(s.substr(slash + 1)), line);
  if (den == 0.0) bad_value(key, raw, line, "division by zero");
  return num / den;
}

inline long long parse_integer(const std::string& key, const std::string& raw, int line) {
  const std::string s = trim(raw);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, raw, line, "not an integer");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, raw, line, "expected true or false");
}

inline std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(raw);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

template <class F>
auto parse_list(const std::string& key, const std::string& raw, int line, F&& one) {
  std::vector<decltype(one(key, raw, line))> out;
  for (const auto& item : split_list(raw)) {
    if (item.empty()) bad_value(key, raw, line, "empty list entry");
    out.push_back(one(key, item, line));
  }
  if (out.empty()) bad_value(key, raw, line, "empty list");
  return out;
}

inline int parse_int(const std::string& key, const std::string& raw, int line) {
  const long long v = parse_integer(key, raw, line);
  if (v < -1000000000LL || v > 1000000000LL) bad_value(key, raw, line, "integer out of range");
  return static_cast<int>(v);
}

}  // namespace detail

/// Applies one key=value setting. `line` is the 1-based source line, or 0
/// for values coming from command-line flags.
inline void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value, int line) {
  using namespace detail;
  auto& c = spec.base;
  const std::string v = trim(value);
  if (key == "kind") {
    if (v == "single-run") spec.kind = ExperimentKind::single_run;
    else if (v == "h-sweep") spec.kind = ExperimentKind::h_sweep;
    else if (v == "tau-sweep") spec.kind = ExperimentKind::tau_sweep;
    else if (v == "coupled-sweep") spec.kind = ExperimentKind::coupled_sweep;
    else if (v == "spectrum-sweep") spec.kind = ExperimentKind::spectrum_sweep;
    else bad_value(key, v, line, "expected single-run, h-sweep, tau-sweep, coupled-sweep or spectrum-sweep");
  } else if (key == "dim") {
    c.dimension = parse_int(key, v, line);
  } else if (key == "level") {
    c.level = parse_int(key, v, line);
  } else if (key == "levels") {
    spec.levels = parse_list(key, v, line, parse_int);
  } else if (key == "tau") {
    c.tau = parse_number(key, v, line);
  } else if (key == "taus") {
    spec.taus = parse_list(key, v, line, parse_number);
  } else if (key == "eps") {
    c.eps = parse_number(key, v, line);
  } else if (key == "epsilons") {
    spec.epsilons = parse_list(key, v, line, parse_number);
  } else if (key == "tfinal") {
    c.t_final = parse_number(key, v, line);
  } else if (key == "ic") {
    if (v == "cosine") c.initial_condition = InitialCondition::cosine;
    else if (v == "random") c.initial_condition = InitialCondition::random;
    else if (v == "constant") c.initial_condition = InitialCondition::constant;
    else bad_value(key, v, line, "expected cosine, random or constant");
  } else if (key == "projection") {
    if (v == "interpolate") c.projection = InitialProjection::interpolate;
    else if (v == "ritz") c.projection = InitialProjection::ritz;
    else bad_value(key, v, line, "expected interpolate or ritz");
  } else if (key == "seed") {
    const long long s = parse_integer(key, v, line);
    if (s < 0) bad_value(key, v, line, "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "amplitude") {
    c.random_amplitude = parse_number(key, v, line);
  } else if (key == "mean") {
    c.random_mean = parse_number(key, v, line);
  } else if (key == "constant") {
    c.constant_value = parse_number(key, v, line);
  } else if (key == "newton_linf_tol") {
    c.newton_linf_tol = parse_number(key, v, line);
  } else if (key == "newton_residual_tol") {
    c.newton_residual_tol = parse_number(key, v, line);
  } else if (key == "max_newton") {
    c.max_newton = parse_int(key, v, line);
  } else if (key == "minres_rtol") {
    c.minres_rtol = parse_number(key, v, line);
  } else if (key == "minres_maxit") {
    c.minres_maxit = parse_int(key, v, line);
  } else if (key == "nu_pre") {
    c.nu_pre = parse_int(key, v, line);
  } else if (key == "nu_post") {
    c.nu_post = parse_int(key, v, line);
  } else if (key == "coupling") {
    if (v == "mean-projected") c.coupling = WeightedMassCoupling::mean_projected;
    else if (v == "as-assembled") c.coupling = WeightedMassCoupling::as_assembled;
    else bad_value(key, v, line, "expected mean-projected or as-assembled");
  } else if (key == "coupled_tau_factor") {
    spec.coupled_tau_factor = parse_number(key, v, line);
  } else if (key == "out") {
    if (v.empty()) bad_value(key, v, line, "empty path");
    spec.output_dir = v;
  } else if (key == "timing") {
    spec.timing = parse_bool(key, v, line);
  } else if (key == "snapshot_every") {
    spec.snapshot_every = parse_int(key, v, line);
  } else {
    throw ConfigError(where(line) + ": unknown key '" + key + "'");
  }
}

/// Checks every run a spec schedules. Spectrum sweeps only need valid
/// (dim, level, tau, eps); the time horizon is not used there.
inline void validate(const ExperimentSpec& spec) {
  if (spec.snapshot_every < 0) throw ConfigError("snapshot_every must be nonnegative");
  if (!(spec.coupled_tau_factor > 0.0)) throw ConfigError("coupled_tau_factor must be positive");
  if (spec.kind == ExperimentKind::coupled_sweep && !spec.taus.empty()) {
    throw ConfigError("coupled-sweep derives tau from h; 'taus' is not allowed");
  }
  if (spec.kind == ExperimentKind::single_run &&
      (spec.levels.size() > 1 || spec.taus.size() > 1 || spec.epsilons.size() > 1)) {
    throw ConfigError("single-run takes one value per parameter; use a sweep kind for lists");
  }
}

inline std::vector<SweepPoint> schedule(const ExperimentSpec& spec);

inline void validate_all(const ExperimentSpec& spec) {
  validate(spec);
  for (const auto& p : schedule(spec)) {
    if (spec.kind == ExperimentKind::spectrum_sweep) {
      RunConfig c = p.config;
      c.t_final = c.tau;
      c.validate();
    } else {
      p.config.validate();
    }
  }
}

/// Parses flat key=value text. '#' starts a comment; blank lines are
/// skipped. Unknown keys and malformed values raise ConfigError naming the
/// key and line.
inline ExperimentSpec parse_config(std::istream& is) {
  ExperimentSpec spec;
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key=value");
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    if (const auto it = seen.find(key); it != seen.end()) {
      throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' repeats line " +
                        std::to_string(it->second));
    }
    seen[key] = line;
    apply_setting(spec, key, text.substr(eq + 1), line);
  }
  validate_all(spec);
  return spec;
}

inline ExperimentSpec parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(is);
}

/// Runs in parameter order: epsilons outermost, then levels, then taus.
inline std::vector<SweepPoint> schedule(const ExperimentSpec& spec) {
  std::vector<SweepPoint> out;
  int index = 0;
  for (double eps : spec.eps_list()) {
    for (int level : spec.level_list()) {
      std::vector<double> taus = spec.tau_list();
      if (spec.kind == ExperimentKind::coupled_sweep) {
        const auto meshes = build_hierarchy(spec.base.dimension, std::max(level, 0));
        taus = {spec.coupled_tau_factor * mesh_size(meshes.levels.back()) / std::sqrt(2.0)};
      }
      for (double tau : taus) {
        SweepPoint p;
        p.index = index++;
        p.config = spec.base;
        p.config.level = level;
        p.config.tau = tau;
        p.config.eps = eps;
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stats tables
// ---------------------------------------------------------------------------

inline void write_stats_header(std::ostream& os, bool timing = true) {
  os << "step,time,newton_its,minres_its,energy,mass";
  if (timing) os << ",wall_seconds";
  os << '\n';
}

inline void write_stats_row(std::ostream& os, const StepStats& s, bool timing = true) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10e,%d,%d,%.15e,%.15e", s.step_index, s.time, s.newton_iterations,
                s.minres_total, s.energy_after, s.mass_after);
  os << buf;
  if (timing) {
    std::snprintf(buf, sizeof buf, ",%.6e", s.wall_seconds);
    os << buf;
  }
  os << '\n';
}

inline void write_stats_csv(std::ostream& os, const std::vector<StepStats>& steps, bool timing = true) {
  write_stats_header(os, timing);
  for (const auto& s : steps) write_stats_row(os, s, timing);
}

/// Per Newton iteration: MINRES count, both MINRES residual norms and the
/// nonlinear residual after the update.
inline void write_newton_log_header(std::ostream& os) {
  os << "step,newton_it,minres_its,minres_precond_relres,minres_true_relres,residual_after\n";
}

inline void write_newton_log(std::ostream& os, const std::vector<StepStats>& steps) {
  write_newton_log_header(os);
  char buf[256];
  for (const auto& s : steps) {
    for (std::size_t k = 0; k < s.minres_reports.size(); ++k) {
      const auto& r = s.minres_reports[k];
      const double after = k + 1 < s.newton_residuals.size() ? s.newton_residuals[k + 1] : -1.0;
      std::snprintf(buf, sizeof buf, "%d,%zu,%d,%.6e,%.6e,%.6e\n", s.step_index, k + 1, r.iterations,
                    r.relative_residual, r.true_relative_residual, after);
      os << buf;
    }
  }
}

struct IterationSummary {
  int steps = 0;
  double avg_minres = 0.0;
  double median_minres = 0.0;
  int max_minres = 0;
  double avg_newton = 0.0;
  double avg_wall_seconds = 0.0;
  double single_newton_fraction = 0.0;
};

inline IterationSummary summarize(const std::vector<StepStats>& steps) {
  IterationSummary s;
  s.steps = static_cast<int>(steps.size());
  if (steps.empty()) return s;
  std::vector<int> counts;
  counts.reserve(steps.size());
  long long newton = 0;
  int single = 0;
  double wall = 0.0;
  for (const auto& st : steps) {
    counts.push_back(st.minres_total);
    newton += st.newton_iterations;
    if (st.newton_iterations == 1) ++single;
    wall += st.wall_seconds;
  }
  const double n = static_cast<double>(steps.size());
  s.avg_minres = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  s.max_minres = *std::max_element(counts.begin(), counts.end());
  std::sort(counts.begin(), counts.end());
  const std::size_t mid = counts.size() / 2;
  s.median_minres = counts.size() % 2 == 1 ? counts[mid] : 0.5 * (counts[mid - 1] + counts[mid]);
  s.avg_newton = static_cast<double>(newton) / n;
  s.avg_wall_seconds = wall / n;
  s.single_newton_fraction = single / n;
  return s;
}

struct SweepRow {
  RunConfig config;
  double h = 0.0;
  IterationSummary summary;
  bool completed = false;
};

inline void write_sweep_header(std::ostream& os, bool timing = true) {
  os << "dim,level,h,tau,eps,steps,avg_minres,median_minres,max_minres,avg_newton";
  if (timing) os << ",avg_wall_seconds";
  os << ",completed\n";
}

inline void write_sweep_row(std::ostream& os, const SweepRow& r, bool timing = true) {
  char buf[320];
  const auto& s = r.summary;
  std::snprintf(buf, sizeof buf, "%d,%d,%.10f,%.10e,%.10e,%d,%.2f,%.1f,%d,%.4f", r.config.dimension, r.config.level,
                r.h, r.config.tau, r.config.eps, s.steps, s.avg_minres, s.median_minres, s.max_minres, s.avg_newton);
  os << buf;
  if (timing) {
    std::snprintf(buf, sizeof buf, ",%.6e", s.avg_wall_seconds);
    os << buf;
  }
  os << ',' << (r.completed ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// VTK snapshots
// ---------------------------------------------------------------------------

inline void write_vtk_point_scalars(std::ostream& os, const std::string& name, std::span<const double> values) {
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

inline void write_snapshot(std::ostream& os, const MeshLevel& mesh, const ChState& state) {
  if (state.phi.values.size() != mesh.num_vertices() || state.mu.values.size() != mesh.num_vertices()) {
    throw AssemblyError("write_snapshot: state does not match mesh");
  }
  char title[128];
  std::snprintf(title, sizeof title, "chmg step %d time %.10e", state.step_index, state.time);
  write_vtk_mesh(os, mesh, title);
  os << "POINT_DATA " << mesh.num_vertices() << '\n';
  write_vtk_point_scalars(os, "phi", state.phi.values);
  write_vtk_point_scalars(os, "mu", state.mu.values);
}

inline void write_snapshot(const std::string& path, const MeshLevel& mesh, const ChState& state) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_snapshot(os, mesh, state);
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

struct VtkData {
  std::string title;
  std::vector<Point> points;
  std::vector<std::vector<int>> cells;
  std::vector<int> cell_types;
  std::map<std::string, Vector> point_scalars;
};

/// Reader for the subset of legacy ASCII VTK written above.
inline VtkData read_vtk(std::istream& is) {
  VtkData d;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# vtk DataFile Version", 0) != 0) {
    throw ConfigError("read_vtk: missing VTK header");
  }
  std::getline(is, d.title);
  std::string word;
  is >> word;
  if (word != "ASCII") throw ConfigError("read_vtk: only ASCII files are supported");
  is >> word >> word;
  if (word != "UNSTRUCTURED_GRID") throw ConfigError("read_vtk: expected UNSTRUCTURED_GRID");
  std::size_t npoint_data = 0;
  while (is >> word) {
    if (word == "POINTS") {
      std::size_t n = 0;
      is >> n >> word;
      d.points.resize(n);
      for (auto& p : d.points) is >> p[0] >> p[1] >> p[2];
    } else if (word == "CELLS") {
      std::size_t n = 0, total = 0;
      is >> n >> total;
      d.cells.resize(n);
      for (auto& c : d.cells) {
        int k = 0;
        is >> k;
        c.resize(static_cast<std::size_t>(k));
        for (int& v : c) is >> v;
      }
    } else if (word == "CELL_TYPES") {
      std::size_t n = 0;
      is >> n;
      d.cell_types.resize(n);
      for (int& t : d.cell_types) is >> t;
    } else if (word == "POINT_DATA") {
      is >> npoint_data;
    } else if (word == "SCALARS") {
      std::string name, type;
      is >> name >> type;
      std::getline(is, line);
      is >> word >> word;  // LOOKUP_TABLE default
      Vector v(npoint_data);
      for (auto& x : v) {
        // operator>> does not accept every %.17g spelling (inf, nan); strtod does.
        is >> word;
        x = std::strtod(word.c_str(), nullptr);
      }
      d.point_scalars[name] = std::move(v);
    } else {
      throw ConfigError("read_vtk: unexpected section '" + word + "'");
    }
    if (!is && !is.eof()) throw ConfigError("read_vtk: malformed " + word + " section");
  }
  return d;
}

inline VtkData read_vtk(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return read_vtk(is);
}

}  // namespace chmg
