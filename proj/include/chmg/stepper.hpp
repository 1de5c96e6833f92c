#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chmg/assembly.hpp"
#include "chmg/errors.hpp"
#include "chmg/jacobian.hpp"
#include "chmg/minres.hpp"
#include "chmg/multigrid.hpp"
#include "chmg/projection.hpp"

namespace chmg {

enum class InitialCondition { cosine, random, constant, custom };
enum class InitialProjection { interpolate, ritz };

struct RunConfig {
  int dimension = 2;
  int level = 2;  // finest mesh level; multigrid uses levels 0..level
  double tau = 0.002 / 64;
  double eps = 0.0625;
  double t_final = 0.04;

  double newton_linf_tol = 1e-15;
  double newton_residual_tol = 1e-7;
  int max_newton = 20;
  double minres_rtol = 1e-7;
  int minres_maxit = 500;
  int nu_pre = 4;
  int nu_post = 4;
  WeightedMassCoupling coupling = WeightedMassCoupling::mean_projected;

  InitialCondition initial_condition = InitialCondition::cosine;
  InitialProjection projection = InitialProjection::interpolate;
  std::uint64_t seed = 1;
  double random_amplitude = 0.05;
  double random_mean = 0.0;
  double constant_value = 0.0;
  ScalarFunction custom_initial;
  GradientFunction custom_gradient;

  std::vector<int> snapshot_steps;

  /// Number of time steps T / tau; throws unless T is a positive integer
  /// multiple of tau.
  int num_steps() const {
    const double m = t_final / tau;
    const double r = std::round(m);
    if (!(r >= 1.0) || std::abs(m - r) > 1e-9 * std::max(1.0, r)) {
      throw ConfigError("t_final must be a positive integer multiple of tau");
    }
    return static_cast<int>(r);
  }

  void validate() const {
    if (dimension != 2 && dimension != 3) throw ConfigError("dimension must be 2 or 3");
    if (level < 0 || level > (dimension == 2 ? 10 : 7)) throw ConfigError("level out of range");
    check_time_parameters(tau, eps, "RunConfig");
    (void)num_steps();
    if (!(newton_linf_tol >= 0.0) || !(newton_residual_tol >= 0.0)) throw ConfigError("Newton tolerances must be nonnegative");
    if (max_newton < 1) throw ConfigError("max_newton must be at least 1");
    if (!(minres_rtol > 0.0 && minres_rtol < 1.0)) throw ConfigError("minres_rtol must lie in (0, 1)");
    if (minres_maxit < 1) throw ConfigError("minres_maxit must be at least 1");
    if (nu_pre < 0 || nu_post < 0) throw ConfigError("sweep counts must be nonnegative");
    if (!(random_amplitude >= 0.0)) throw ConfigError("random amplitude must be nonnegative");
    if (initial_condition == InitialCondition::custom && !custom_initial) {
      throw ConfigError("custom initial condition requires a function");
    }
    if (projection == InitialProjection::ritz && initial_condition == InitialCondition::random) {
      throw ConfigError("Ritz projection needs a smooth initial function; random data is nodal only");
    }
    if (projection == InitialProjection::ritz && initial_condition == InitialCondition::custom && !custom_gradient) {
      throw ConfigError("Ritz projection of custom data requires its gradient");
    }
  }
};

/// phi0(x) = 1/2 (1 - cos 2 pi x1)(1 - cos 2 pi x2) - 1.
inline double cosine_initial(const Point& x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 0.5 * (1.0 - std::cos(two_pi * x[0])) * (1.0 - std::cos(two_pi * x[1])) - 1.0;
}

inline Point cosine_initial_gradient(const Point& x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a = 1.0 - std::cos(two_pi * x[0]);
  const double b = 1.0 - std::cos(two_pi * x[1]);
  return {0.5 * two_pi * std::sin(two_pi * x[0]) * b, 0.5 * two_pi * std::sin(two_pi * x[1]) * a, 0.0};
}

/// Uniform nodal noise in [mean - amplitude, mean + amplitude]. Uses the raw
/// mt19937_64 stream so values do not depend on the standard library's
/// distribution implementation.
inline Vector random_nodal_values(std::size_t n, std::uint64_t seed, double amplitude, double mean) {
  std::mt19937_64 rng(seed);
  Vector v(n);
  for (auto& x : v) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = mean + amplitude * (2.0 * u - 1.0);
  }
  return v;
}

struct ChState {
  int step_index = 0;
  double time = 0.0;
  NodalField phi;  // full field, mean included
  NodalField mu;   // full field, mean included
  double mean_phi0 = 0.0;
  double mean_mu = 0.0;
};

struct StepStats {
  int step_index = 0;
  double time = 0.0;
  int newton_iterations = 0;
  std::vector<int> minres_per_newton;
  std::vector<MinresReport> minres_reports;  // one per Newton iteration
  int minres_total = 0;
  /// Newton residual norms, one before the first update and one after each.
  std::vector<double> newton_residuals;
  double last_correction_linf = 0.0;
  double wall_seconds = 0.0;
  double energy_after = 0.0;
  double mass_after = 0.0;
  double mean_mu = 0.0;
  bool converged = false;
};

/// A time step that failed; carries the diagnostics gathered so far.
class StepFailure : public SolverError {
 public:
  StepFailure(const std::string& what, StepStats stats) : SolverError(what), stats_(std::move(stats)) {}
  const StepStats& stats() const { return stats_; }

 private:
  StepStats stats_;
};

/// mu_bar = eps^-1 ((phi_new)^3 - phi_prev, 1) / |Omega|, the mean of mu
/// obtained by testing the chemical potential equation with psi = 1.
inline double recover_mean_mu(const MeshLevel& mesh, const LevelOperators& ops, std::span<const double> phi_new,
                              std::span<const double> phi_prev, double eps) {
  const double cubic = integrate_power(mesh, phi_new, 3);
  return (cubic - dot(ops.mean, phi_prev)) / eps;
}

/// Euclidean norm of the stacked Newton loads (F~; G~).
inline double residual_norm(const NonlinearResidual& r) {
  return std::sqrt(dot(r.f, r.f) + dot(r.g, r.g));
}

struct NewtonResult {
  Vector phi;
  Vector mu;  // mean-free part
  StepStats stats;
};

/// Mixed P1 convex-splitting Cahn-Hilliard solver on a nested mesh
/// hierarchy. Owns the discretization and the block preconditioner.
class CahnHilliardSolver {
 public:
  explicit CahnHilliardSolver(RunConfig config)
      : config_((config.validate(), std::move(config))),
        disc_(build_discretization(config_.dimension, config_.level)),
        pre_(disc_, config_.tau, config_.eps, config_.nu_pre, config_.nu_post) {}

  const RunConfig& config() const { return config_; }
  const Discretization& discretization() const { return disc_; }
  const MeshLevel& mesh() const { return disc_.fine_mesh(); }
  const LevelOperators& operators() const { return disc_.fine(); }
  const BlockPreconditioner& preconditioner() const { return pre_; }
  int level() const { return config_.level; }

  /// Initial state: nodal interpolant (default) or Ritz projection of the
  /// initial data; mu starts at zero.
  ChState initialize() const {
    const auto& mesh = disc_.fine_mesh();
    ChState s;
    s.phi.level = config_.level;
    switch (config_.initial_condition) {
      case InitialCondition::cosine:
        if (config_.projection == InitialProjection::ritz) {
          s.phi = ritz_projection(disc_, config_.level, cosine_initial, cosine_initial_gradient);
        } else {
          s.phi = interpolate_nodal(mesh, cosine_initial);
        }
        break;
      case InitialCondition::random:
        s.phi.values =
            random_nodal_values(mesh.num_vertices(), config_.seed, config_.random_amplitude, config_.random_mean);
        break;
      case InitialCondition::constant:
        s.phi.values.assign(mesh.num_vertices(), config_.constant_value);
        break;
      case InitialCondition::custom:
        if (config_.projection == InitialProjection::ritz) {
          s.phi = ritz_projection(disc_, config_.level, config_.custom_initial, config_.custom_gradient);
        } else {
          s.phi = interpolate_nodal(mesh, config_.custom_initial);
        }
        break;
    }
    s.mu = {config_.level, Vector(mesh.num_vertices(), 0.0)};
    s.mean_phi0 = dot(operators().mean, s.phi.values);
    return s;
  }

  NonlinearResidual residual(std::span<const double> phi_j, std::span<const double> mu_j,
                             std::span<const double> phi_prev) const {
    return nonlinear_residual(mesh(), operators(), phi_j, mu_j, phi_prev, config_.tau, config_.eps);
  }

  BlockOperator jacobian(std::span<const double> phi_j) const {
    return build_scaled_system(mesh(), operators(), phi_j, config_.tau, config_.eps, config_.coupling);
  }

  /// Newton iteration for one time step starting from (phi_guess, mu_guess).
  /// Stops when ||delta phi||_inf <= newton_linf_tol or the residual norm
  /// <= newton_residual_tol, whichever happens first. phi_guess must carry
  /// the conserved mean.
  NewtonResult newton_solve(std::span<const double> phi_prev, std::span<const double> phi_guess,
                            std::span<const double> mu_guess) const {
    const auto& c = operators().mean;
    NewtonResult out{Vector(phi_guess.begin(), phi_guess.end()), Vector(mu_guess.begin(), mu_guess.end()), {}};
    remove_mean(c, out.mu);
    auto& st = out.stats;
    const MinresOptions opts{config_.minres_rtol, config_.minres_maxit};

    auto r = residual(out.phi, out.mu, phi_prev);
    st.newton_residuals.push_back(residual_norm(r));
    if (st.newton_residuals.back() <= config_.newton_residual_tol) {
      st.converged = true;
      return out;
    }
    for (int it = 1; it <= config_.max_newton; ++it) {
      const BlockOperator op = jacobian(out.phi);
      const Vector rhs = build_scaled_rhs(r.f, r.g, config_.tau, config_.eps);
      const NewtonCorrection corr = solve_newton_system(op, pre_, rhs, opts);
      st.minres_per_newton.push_back(corr.report.iterations);
      st.minres_reports.push_back(corr.report);
      st.minres_total += corr.report.iterations;
      st.newton_iterations = it;
      if (!corr.report.converged) {
        throw StepFailure("MINRES did not converge in Newton iteration " + std::to_string(it) +
                              " (relative residual " + std::to_string(corr.report.relative_residual) + ")",
                          st);
      }
      axpy(-1.0, corr.delta_mu, out.mu);
      axpy(-1.0, corr.delta_phi, out.phi);
      st.last_correction_linf = norm_inf(corr.delta_phi);

      r = residual(out.phi, out.mu, phi_prev);
      st.newton_residuals.push_back(residual_norm(r));
      if (st.last_correction_linf <= config_.newton_linf_tol ||
          st.newton_residuals.back() <= config_.newton_residual_tol) {
        st.converged = true;
        return out;
      }
    }
    throw StepFailure("Newton did not converge in " + std::to_string(config_.max_newton) +
                          " iterations (residual " + std::to_string(st.newton_residuals.back()) + ")",
                      st);
  }

  /// One time step from `state`; the Newton iteration starts from the
  /// previous step's solution.
  StepStats advance(ChState& state) const {
    const auto t0 = std::chrono::steady_clock::now();
    NewtonResult res = newton_solve(state.phi.values, state.phi.values, state.mu.values);
    const auto t1 = std::chrono::steady_clock::now();

    const double mu_bar = recover_mean_mu(mesh(), operators(), res.phi, state.phi.values, config_.eps);
    for (double& v : res.mu) v += mu_bar;

    state.phi.values = std::move(res.phi);
    state.mu.values = std::move(res.mu);
    state.mean_mu = mu_bar;
    state.step_index += 1;
    state.time = state.step_index * config_.tau;

    StepStats st = std::move(res.stats);
    st.step_index = state.step_index;
    st.time = state.time;
    st.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    st.energy_after = evaluate_energy(mesh(), state.phi.values, config_.eps);
    st.mass_after = dot(operators().mean, state.phi.values);
    st.mean_mu = mu_bar;
    return st;
  }

  double energy(const ChState& s) const { return evaluate_energy(mesh(), s.phi.values, config_.eps); }
  double mass(const ChState& s) const { return dot(operators().mean, s.phi.values); }

 private:
  RunConfig config_;
  Discretization disc_;
  BlockPreconditioner pre_;
};

struct RunResult {
  std::vector<StepStats> steps;
  double initial_energy = 0.0;
  double initial_mass = 0.0;
  ChState final_state;
  bool completed = false;
  std::string failure;
};

/// Called with the state after initialization (step 0) and after each step.
using StepObserver = std::function<void(const ChState&, const StepStats*)>;

/// Runs T / tau steps. A failing step ends the run; the stats gathered up to
/// that point are kept and the failure message recorded.
inline RunResult run_simulation(const CahnHilliardSolver& solver, const StepObserver& observer = {}) {
  RunResult out;
  ChState state = solver.initialize();
  out.initial_energy = solver.energy(state);
  out.initial_mass = solver.mass(state);
  if (observer) observer(state, nullptr);
  const int steps = solver.config().num_steps();
  out.steps.reserve(static_cast<std::size_t>(steps));
  try {
    for (int m = 0; m < steps; ++m) {
      out.steps.push_back(solver.advance(state));
      if (observer) observer(state, &out.steps.back());
    }
    out.completed = true;
  } catch (const StepFailure& e) {
    out.steps.push_back(e.stats());
    out.steps.back().step_index = state.step_index + 1;
    out.failure = e.what();
  }
  out.final_state = std::move(state);
  return out;
}

inline RunResult run_simulation(const RunConfig& config, const StepObserver& observer = {}) {
  const CahnHilliardSolver solver(config);
  return run_simulation(solver, observer);
}

/// Phi_h(varphi) = eps/(2 tau) a(rho, rho) + 1/(4 eps) ||varphi + phibar0||_4^4
///               - 1/eps (phi_prev_free, varphi) + eps/2 a(varphi, varphi),
/// where rho is mean-free with eps a(rho, nu) + (varphi - phi_prev_free, nu) = 0.
/// varphi and phi_prev_free are the mean-free parts; the minimizer is the
/// mean-free part of the next time step.
inline double convex_functional_value(const Discretization& disc, int level, std::span<const double> varphi,
                                      std::span<const double> phi_prev_free, double mean_phi0, double tau,
                                      double eps) {
  const auto& mesh = disc.mesh(level);
  const auto& ops = disc.level(level);
  const std::size_t n = mesh.num_vertices();
  if (varphi.size() != n || phi_prev_free.size() != n) throw AssemblyError("convex_functional_value: size mismatch");
  Vector diff(n), load(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = varphi[i] - phi_prev_free[i];
  ops.mass.apply(diff, load);
  project_load(ops.mean, load);
  scale(-1.0 / eps, load);
  bool has_load = norm_inf(load) > 0.0;
  const Vector rho = has_load ? solve_augmented_stiffness(disc, level, load) : Vector(n, 0.0);

  Vector tmp(n);
  ops.stiffness.apply(rho, tmp);
  const double a_rho = dot(rho, tmp);
  ops.stiffness.apply(varphi, tmp);
  const double a_var = dot(varphi, tmp);
  Vector full(varphi.begin(), varphi.end());
  for (double& v : full) v += mean_phi0;
  const double quartic = integrate_power(mesh, full, 4);
  ops.mass.apply(varphi, tmp);
  const double cross = dot(phi_prev_free, tmp);
  return eps / (2.0 * tau) * a_rho + quartic / (4.0 * eps) - cross / eps + 0.5 * eps * a_var;
}

}  // namespace chmg
