// chmg: Cahn-Hilliard mixed P1 solver front end.
//
//   chmg run      [--config FILE] [flags]     one simulation, stats + Newton log CSV, optional VTK
//   chmg sweep    [--config FILE] [flags]     h / tau / coupled sweeps, summary CSV
//   chmg spectrum [flags]                     dense eigenvalue bound check, CSV
//   chmg check    [--max-level L]             acceptance criteria
//
// Exit status: 0 success, 1 acceptance criterion failed, 2 solver failure,
// 3 configuration error.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "chmg/chmg.hpp"
#include "criteria.hpp"

namespace fs = std::filesystem;
using namespace chmg;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_criteria = 1;
constexpr int exit_solver = 2;
constexpr int exit_config = 3;

struct CommonFlags {
  std::string config;
  std::string dim, levels, tau, eps, tfinal, ic, seed, out;
  bool no_timing = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "flat key=value configuration file");
  app->add_option("--dim", f.dim, "spatial dimension (2 or 3)");
  app->add_option("--levels", f.levels, "finest mesh level, or comma list for sweeps");
  app->add_option("--tau", f.tau, "time step (a/b allowed), or comma list");
  app->add_option("--eps", f.eps, "interface width, or comma list");
  app->add_option("--tfinal", f.tfinal, "final time");
  app->add_option("--ic", f.ic, "initial data: cosine, random or constant");
  app->add_option("--seed", f.seed, "seed for random initial data");
  app->add_option("--out", f.out, "output directory");
  app->add_flag("--no-timing", f.no_timing, "omit wall-clock columns (byte-stable output)");
  app->add_option("--set", f.sets, "extra key=value setting (repeatable)");
}

bool is_list(const std::string& s) { return s.find(',') != std::string::npos; }

enum class Verb { run, sweep, spectrum };

ExperimentSpec build_spec(const CommonFlags& f, Verb verb) {
  const bool allow_lists = verb != Verb::run;
  ExperimentSpec spec = f.config.empty() ? ExperimentSpec{} : parse_config_file(f.config);
  auto set = [&](const std::string& key, const std::string& value) {
    if (!value.empty()) apply_setting(spec, key, value, 0);
  };
  auto set_maybe_list = [&](const std::string& one, const std::string& many, const std::string& value) {
    if (value.empty()) return;
    if (is_list(value) || (allow_lists && many == "levels")) {
      if (!allow_lists) throw ConfigError("command line: flag for '" + one + "' takes a single value here");
      apply_setting(spec, many, value, 0);
    } else {
      apply_setting(spec, one, value, 0);
    }
  };
  set("dim", f.dim);
  set_maybe_list("level", "levels", f.levels);
  set_maybe_list("tau", "taus", f.tau);
  set_maybe_list("eps", "epsilons", f.eps);
  set("tfinal", f.tfinal);
  set("ic", f.ic);
  set("seed", f.seed);
  set("out", f.out);
  if (f.no_timing) spec.timing = false;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("command line: --set expects key=value, got '" + kv + "'");
    apply_setting(spec, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1), 0);
  }
  if (verb == Verb::spectrum) {
    spec.kind = ExperimentKind::spectrum_sweep;
  } else if (verb == Verb::sweep && spec.kind == ExperimentKind::single_run) {
    // lists on the command line imply the matching sweep
    spec.kind = spec.taus.size() > 1 ? ExperimentKind::tau_sweep : ExperimentKind::h_sweep;
  }
  validate_all(spec);
  return spec;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot open '" + p.string() + "' for writing");
  return os;
}

/// Runs one configuration, writing stats and snapshots under `dir` with
/// the given file stem. Returns the run result.
RunResult run_point(const ExperimentSpec& spec, const RunConfig& config, const fs::path& dir,
                    const std::string& stem) {
  const CahnHilliardSolver solver(config);
  const auto& mesh = solver.mesh();
  const int every = spec.snapshot_every;
  auto observer = [&](const ChState& s, const StepStats*) {
    if (every > 0 && s.step_index % every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "_%06d.vtk", s.step_index);
      write_snapshot((dir / (stem + name)).string(), mesh, s);
    }
  };
  RunResult res = run_simulation(solver, observer);
  auto os = open_out(dir / (stem + ".csv"));
  write_stats_csv(os, res.steps, spec.timing);
  auto log = open_out(dir / (stem + "_newton.csv"));
  write_newton_log(log, res.steps);
  return res;
}

int cmd_run(const CommonFlags& f) {
  const ExperimentSpec spec = build_spec(f, Verb::run);
  if (spec.kind != ExperimentKind::single_run) throw ConfigError("'run' needs kind=single-run; use 'sweep'");
  ensure_dir(spec.output_dir);
  const RunConfig& c = spec.base;
  const auto res = run_point(spec, c, spec.output_dir, "stats");
  const auto s = summarize(res.steps);
  std::printf("dim %d level %d tau %.6e eps %.6e steps %d avg minres %.2f median %.1f max %d avg newton %.3f\n",
              c.dimension, c.level, c.tau, c.eps, s.steps, s.avg_minres, s.median_minres, s.max_minres,
              s.avg_newton);
  if (!res.completed) {
    std::fprintf(stderr, "solver failure at step %d: %s\n", static_cast<int>(res.steps.size()), res.failure.c_str());
    return exit_solver;
  }
  return exit_ok;
}

int cmd_sweep(const CommonFlags& f, int jobs) {
  const ExperimentSpec spec = build_spec(f, Verb::sweep);
  if (spec.kind == ExperimentKind::spectrum_sweep) throw ConfigError("use 'spectrum' for spectrum sweeps");
  ensure_dir(spec.output_dir);
  const auto points = schedule(spec);
  std::vector<SweepRow> rows(points.size());
  std::vector<std::string> failures(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      const auto& p = points[i];
      char stem[32];
      std::snprintf(stem, sizeof stem, "point_%03d", p.index);
      try {
        const auto res = run_point(spec, p.config, spec.output_dir, stem);
        const auto meshes = build_hierarchy(p.config.dimension, p.config.level);
        rows[i] = {p.config, mesh_size(meshes.levels.back()), summarize(res.steps), res.completed};
        if (!res.completed) failures[i] = res.failure;
        std::lock_guard lock(log_mutex);
        std::printf("point %3d level %d tau %.6e eps %.6e avg minres %.2f%s\n", p.index, p.config.level,
                    p.config.tau, p.config.eps, rows[i].summary.avg_minres, res.completed ? "" : " FAILED");
      } catch (const std::exception& e) {
        failures[i] = e.what();
        rows[i].config = p.config;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  auto os = open_out(fs::path(spec.output_dir) / "summary.csv");
  write_sweep_header(os, spec.timing);
  for (const auto& r : rows) write_sweep_row(os, r, spec.timing);
  int status = exit_ok;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) {
      std::fprintf(stderr, "point %zu failed: %s\n", i, failures[i].c_str());
      status = exit_solver;
    }
  }
  return status;
}

int cmd_spectrum(const CommonFlags& f) {
  const ExperimentSpec spec = build_spec(f, Verb::spectrum);
  std::ostringstream csv;
  write_spectrum_header(csv);
  bool all = true;
  for (const auto& p : schedule(spec)) {
    const auto rep = analyze_spectrum(p.config.dimension, p.config.level, p.config.tau, p.config.eps);
    write_spectrum_row(csv, rep);
    all = all && rep.pass();
  }
  if (f.out.empty() && spec.output_dir == ".") {
    std::cout << csv.str();
  } else {
    ensure_dir(spec.output_dir);
    auto os = open_out(fs::path(spec.output_dir) / "spectrum.csv");
    os << csv.str();
  }
  return all ? exit_ok : exit_criteria;
}

int cmd_check(int max_level, int tau_level, bool quiet) {
  acceptance::Options opts;
  opts.max_level = max_level;
  opts.tau_sweep_level = tau_level;
  opts.log = quiet ? nullptr : &std::cout;
  acceptance::Suite suite(opts);
  int failed = 0;
  suite.run_all([&](const acceptance::CriterionResult& r) {
    acceptance::print_result(std::cout, r);
    if (!r.pass) ++failed;
  });
  std::printf("%d of 12 criteria failed\n", failed);
  return failed ? exit_criteria : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard convex-splitting solver with multigrid-preconditioned MINRES"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, spec_flags;
  auto* run = app.add_subcommand("run", "run one simulation");
  add_common(run, run_flags);
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep, sweep_flags);
  int jobs = 1;
  sweep->add_option("--jobs", jobs, "parallel sweep points")->check(CLI::PositiveNumber);
  auto* spectrum = app.add_subcommand("spectrum", "check preconditioned eigenvalue bounds");
  add_common(spectrum, spec_flags);
  auto* check = app.add_subcommand("check", "run the acceptance criteria");
  int max_level = 5, tau_level = 4;
  bool quiet = false;
  check->add_option("--max-level", max_level, "finest 2D level of the h sweeps")->check(CLI::Range(3, 7));
  check->add_option("--tau-level", tau_level, "2D level of the tau sweep")->check(CLI::Range(2, 7));
  check->add_flag("--quiet", quiet, "only print the criterion lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags, jobs);
    if (*spectrum) return cmd_spectrum(spec_flags);
    if (*check) return cmd_check(max_level, tau_level, quiet);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return exit_solver;
  }
  return exit_ok;
}
