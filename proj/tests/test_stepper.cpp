#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace chmg;

namespace {

RunConfig small_config(int level = 2) {
  RunConfig c;
  c.level = level;
  c.tau = 0.002 / 64;
  c.eps = 0.0625;
  c.t_final = 8 * c.tau;
  return c;
}

Vector mean_free(const Vector& v, const Vector& c) {
  Vector out = v;
  remove_mean(c, out);
  return out;
}

}  // namespace

TEST(InitialData, CosineValues) {
  EXPECT_NEAR(cosine_initial({0, 0, 0}), -1.0, 1e-15);
  EXPECT_NEAR(cosine_initial({1, 1, 0}), -1.0, 1e-15);
  EXPECT_NEAR(cosine_initial({0.5, 0.5, 0}), 1.0, 1e-15);
  EXPECT_NEAR(cosine_initial({0.5, 0, 0}), -1.0, 1e-15);
  const Point x{0.3, 0.7, 0};
  const double h = 1e-6;
  const auto g = cosine_initial_gradient(x);
  EXPECT_NEAR(g[0], (cosine_initial({0.3 + h, 0.7, 0}) - cosine_initial({0.3 - h, 0.7, 0})) / (2 * h), 1e-7);
  EXPECT_NEAR(g[1], (cosine_initial({0.3, 0.7 + h, 0}) - cosine_initial({0.3, 0.7 - h, 0})) / (2 * h), 1e-7);
}

TEST(InitialData, RandomValuesAreDeterministicAndBounded) {
  const auto a = random_nodal_values(100, 42, 0.05, 0.1);
  const auto b = random_nodal_values(100, 42, 0.05, 0.1);
  const auto c = random_nodal_values(100, 43, 0.05, 0.1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (double v : a) {
    EXPECT_GE(v, 0.05);
    EXPECT_LE(v, 0.15);
  }
}

TEST(InitialData, StateStartsWithZeroPotential) {
  auto cfg = small_config();
  cfg.initial_condition = InitialCondition::random;
  cfg.seed = 7;
  const CahnHilliardSolver s(cfg);
  const auto st = s.initialize();
  EXPECT_EQ(norm_inf(st.mu.values), 0.0);
  EXPECT_EQ(st.phi.values, random_nodal_values(s.mesh().num_vertices(), 7, 0.05, 0.0));
  EXPECT_NEAR(st.mean_phi0, dot(s.operators().mean, st.phi.values), 0.0);
}

TEST(Config, Validation) {
  auto c = small_config();
  c.t_final = 2.5 * c.tau;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.dimension = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.initial_condition = InitialCondition::random;
  c.projection = InitialProjection::ritz;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(small_config().num_steps(), 8);
}

TEST(MeanPotential, Examples) {
  const auto disc = build_discretization(2, 2);
  const auto& m = disc.fine_mesh();
  const std::size_t n = m.num_vertices();
  // phi = 1 after, phi_prev = 1: (1 - 1) / eps
  EXPECT_NEAR(recover_mean_mu(m, disc.fine(), Vector(n, 1.0), Vector(n, 1.0), 0.5), 0.0, 1e-14);
  // phi = 0.5, phi_prev = 0: 0.125 / eps
  EXPECT_NEAR(recover_mean_mu(m, disc.fine(), Vector(n, 0.5), Vector(n, 0.0), 0.25), 0.5, 1e-14);
}

TEST(Stepper, PureStateIsStationary) {
  auto cfg = small_config();
  cfg.initial_condition = InitialCondition::constant;
  cfg.constant_value = 1.0;
  const auto res = run_simulation(cfg);
  ASSERT_TRUE(res.completed);
  for (const auto& st : res.steps) {
    EXPECT_EQ(st.newton_iterations, 0);
    EXPECT_EQ(st.minres_total, 0);
    EXPECT_NEAR(st.energy_after, 0.0, 1e-15);
  }
  for (double v : res.final_state.phi.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Stepper, SingleStepRun) {
  auto cfg = small_config();
  cfg.t_final = cfg.tau;
  const auto res = run_simulation(cfg);
  ASSERT_TRUE(res.completed);
  ASSERT_EQ(res.steps.size(), 1u);
  EXPECT_EQ(res.steps[0].step_index, 1);
  EXPECT_DOUBLE_EQ(res.steps[0].time, cfg.tau);
  EXPECT_GE(res.steps[0].newton_iterations, 1);
  EXPECT_TRUE(res.steps[0].converged);
}

TEST(Stepper, FarGuessNeedsSeveralNewtonIterations) {
  const auto cfg = small_config();
  const CahnHilliardSolver s(cfg);
  const auto st = s.initialize();
  Vector guess = st.phi.values;
  const double mean = dot(s.operators().mean, guess);
  for (double& v : guess) v = mean + 10.0 * (v - mean);
  const auto res = s.newton_solve(st.phi.values, guess, st.mu.values);
  EXPECT_GT(res.stats.newton_iterations, 1);
  EXPECT_TRUE(res.stats.converged);
  const auto& r = res.stats.newton_residuals;
  ASSERT_GE(r.size(), 3u);
  EXPECT_LT(r.back(), r.front());
  EXPECT_LT(r.back(), cfg.newton_residual_tol * 1.0000001);
  EXPECT_NEAR(dot(s.operators().mean, res.phi), mean, 1e-13);
}

TEST(Stepper, MassAndEnergyLaws) {
  auto cfg = small_config(3);
  cfg.t_final = 32 * cfg.tau;
  const CahnHilliardSolver s(cfg);
  const auto res = run_simulation(s);
  ASSERT_TRUE(res.completed);
  double prev = res.initial_energy;
  for (const auto& st : res.steps) {
    EXPECT_NEAR(st.mass_after, res.initial_mass, 1e-12);
    EXPECT_LE(st.energy_after, prev + 1e-10);
    prev = st.energy_after;
  }
  EXPECT_LT(prev, res.initial_energy);
}

TEST(Stepper, FinalResidualSatisfiesTheDiscreteEquations) {
  auto cfg = small_config(2);
  const CahnHilliardSolver s(cfg);
  auto state = s.initialize();
  const Vector prev = state.phi.values;
  const auto st = s.advance(state);
  ASSERT_TRUE(st.converged);
  const auto r = s.residual(state.phi.values, state.mu.values, prev);
  EXPECT_LE(residual_norm(r), cfg.newton_residual_tol * 1.0000001);
  // the mean of mu satisfies the psi = 1 test of the second equation
  const double cubic = integrate_power(s.mesh(), state.phi.values, 3);
  EXPECT_NEAR(dot(s.operators().mean, state.mu.values), (cubic - dot(s.operators().mean, prev)) / cfg.eps, 1e-10);
}

TEST(Stepper, ObserverSeesEveryStep) {
  const auto cfg = small_config();
  int calls = 0, initial = 0;
  run_simulation(cfg, [&](const ChState& st, const StepStats* stats) {
    if (!stats) ++initial;
    else EXPECT_EQ(stats->step_index, st.step_index);
    ++calls;
  });
  EXPECT_EQ(initial, 1);
  EXPECT_EQ(calls, 1 + cfg.num_steps());
}

TEST(Stepper, MinresFailureIsReported) {
  auto cfg = small_config();
  cfg.minres_maxit = 1;
  const auto res = run_simulation(cfg);
  EXPECT_FALSE(res.completed);
  EXPECT_NE(res.failure.find("MINRES"), std::string::npos);
  ASSERT_EQ(res.steps.size(), 1u);
  EXPECT_EQ(res.steps[0].step_index, 1);
}

TEST(Stepper, IterationCountsOnLevelTwo) {
  auto cfg = small_config(2);
  cfg.t_final = 0.04;
  const auto res = run_simulation(cfg);
  ASSERT_TRUE(res.completed);
  double total = 0.0;
  for (const auto& st : res.steps) total += st.minres_total;
  const double avg = total / static_cast<double>(res.steps.size());
  EXPECT_GT(avg, 10.0);
  EXPECT_LT(avg, 30.0);
}

TEST(ConvexFunctional, Examples) {
  const auto disc = build_discretization(2, 2);
  const std::size_t n = disc.fine_mesh().num_vertices();
  const Vector z(n, 0.0);
  const double eps = 0.0625, tau = 0.002 / 64;
  // zero field, zero mean: only the quartic term, int 0 = 0
  EXPECT_NEAR(convex_functional_value(disc, 2, z, z, 0.0, tau, eps), 0.0, 1e-15);
  // zero field around mean 1: 1 / (4 eps)
  EXPECT_NEAR(convex_functional_value(disc, 2, z, z, 1.0, tau, eps), 1.0 / (4 * eps), 1e-12);
}

TEST(ConvexFunctional, NewStepIsTheMinimizer) {
  auto cfg = small_config(2);
  const CahnHilliardSolver s(cfg);
  auto state = s.initialize();
  const auto& c = s.operators().mean;
  const Vector prev_free = mean_free(state.phi.values, c);
  const double mean0 = state.mean_phi0;
  s.advance(state);
  const Vector next_free = mean_free(state.phi.values, c);
  const auto& disc = s.discretization();
  const double f0 = convex_functional_value(disc, 2, next_free, prev_free, mean0, cfg.tau, cfg.eps);
  for (unsigned k = 0; k < 20; ++k) {
    auto d = oracle::random_vector(next_free.size(), 200 + k, -1e-3, 1e-3);
    remove_mean(c, d);
    Vector trial = next_free;
    axpy(1.0, d, trial);
    EXPECT_GT(convex_functional_value(disc, 2, trial, prev_free, mean0, cfg.tau, cfg.eps), f0 - 1e-12) << k;
  }
  // the auxiliary potential equals tau times the mean-free potential
  const std::size_t n = next_free.size();
  Vector diff(n), load(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = next_free[i] - prev_free[i];
  s.operators().mass.apply(diff, load);
  project_load(c, load);
  scale(-1.0 / cfg.eps, load);
  const Vector rho = solve_augmented_stiffness(disc, 2, load);
  const Vector mu_free = mean_free(state.mu.values, c);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err = std::max(err, std::abs(rho[i] - cfg.tau * mu_free[i]));
    ref = std::max(ref, std::abs(cfg.tau * mu_free[i]));
  }
  EXPECT_LT(err, 1e-4 * ref);
}
