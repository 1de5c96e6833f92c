#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace chmg;

namespace {

struct Setup {
  Discretization disc;
  const MeshLevel& mesh() const { return disc.fine_mesh(); }
  const LevelOperators& ops() const { return disc.fine(); }
};

Eigen::MatrixXd dense_operator(const MeshLevel& m, const LevelOperators& ops, const Vector& phi, double tau,
                               double eps, bool projected) {
  const Eigen::MatrixXd k = oracle::dense_stiffness(m);
  const Eigen::MatrixXd mm = oracle::dense_mass(m);
  const Eigen::VectorXd c = oracle::vec(ops.mean);
  const auto n = c.size();
  const Eigen::MatrixXd kc = k + c * c.transpose();
  Eigen::MatrixXd j = oracle::dense_weighted_mass(m, phi, [](double u) { return 3 * u * u; });
  if (projected) {
    const Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(n, n) - Eigen::VectorXd::Ones(n) * c.transpose();
    j = pi.transpose() * j * pi;
  }
  const double s = std::sqrt(tau);
  Eigen::MatrixXd b(2 * n, 2 * n);
  b << s * kc, mm, mm, -s * j - s * eps * eps * kc;
  return b;
}

}  // namespace

TEST(BlockOperator, ActionOnConstants) {
  const auto disc = build_discretization(2, 2);
  const auto& ops = disc.fine();
  const std::size_t n = ops.mean.size();
  const double tau = 0.002 / 64, eps = 0.0625;
  const auto op = build_scaled_system(disc.fine_mesh(), ops, Vector(n, 0.0), tau, eps);
  Vector x(2 * n, 0.0), y(2 * n);
  std::fill(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
  op.apply(x, y);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(y[i], std::sqrt(tau) * ops.mean[i], 1e-15);
    EXPECT_NEAR(y[n + i], ops.mean[i], 1e-15);
  }
}

TEST(BlockOperator, MatchesDenseOracle) {
  const auto disc = build_discretization(2, 1);
  const auto& m = disc.fine_mesh();
  const auto phi = oracle::random_vector(m.num_vertices(), 3);
  const double tau = 0.002 / 64, eps = 0.0625;
  for (bool projected : {true, false}) {
    const auto coupling = projected ? WeightedMassCoupling::mean_projected : WeightedMassCoupling::as_assembled;
    const auto op = build_scaled_system(m, disc.fine(), phi, tau, eps, coupling);
    const Eigen::MatrixXd a = oracle::materialize(op);
    const Eigen::MatrixXd ref = dense_operator(m, disc.fine(), phi, tau, eps, projected);
    EXPECT_LT((a - ref).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(BlockOperator, UnitFieldReproducesModelMatrix) {
  const auto disc = build_discretization(2, 1);
  const auto& m = disc.fine_mesh();
  const double tau = 0.01, eps = 0.1;
  const auto op = build_scaled_system(m, disc.fine(), Vector(m.num_vertices(), 1.0), tau, eps,
                                      WeightedMassCoupling::as_assembled);
  const auto sys = assemble_dense_BP(m, tau, eps);
  EXPECT_LT((oracle::materialize(op) - sys.b).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BlockOperator, CouplingModesDifferOnlyThroughTheMean) {
  const auto disc = build_discretization(2, 2);
  const auto& m = disc.fine_mesh();
  const auto phi = oracle::random_vector(m.num_vertices(), 31);
  const double tau = 0.002 / 64, eps = 0.0625;
  const auto a = build_scaled_system(m, disc.fine(), phi, tau, eps, WeightedMassCoupling::mean_projected);
  const auto b = build_scaled_system(m, disc.fine(), phi, tau, eps, WeightedMassCoupling::as_assembled);
  const std::size_t n = m.num_vertices();
  // mean-free v and loads tested against mean-free w agree
  auto v = oracle::random_vector(2 * n, 32);
  auto w = oracle::random_vector(2 * n, 33);
  remove_mean(disc.fine().mean, std::span<double>(v).subspan(n, n));
  Vector ya(2 * n), yb(2 * n);
  a.apply(v, ya);
  b.apply(v, yb);
  Vector wb(w.begin() + static_cast<std::ptrdiff_t>(n), w.end());
  remove_mean(disc.fine().mean, wb);
  const Vector da(ya.begin() + static_cast<std::ptrdiff_t>(n), ya.end());
  const Vector db(yb.begin() + static_cast<std::ptrdiff_t>(n), yb.end());
  EXPECT_NEAR(dot(da, wb), dot(db, wb), 1e-14);
  // on a constant phi block they differ for non-constant phi
  Vector one(2 * n, 0.0);
  std::fill(one.begin() + static_cast<std::ptrdiff_t>(n), one.end(), 1.0);
  a.apply(one, ya);
  b.apply(one, yb);
  double diff = 0.0;
  for (std::size_t i = n; i < 2 * n; ++i) diff = std::max(diff, std::abs(ya[i] - yb[i]));
  EXPECT_GT(diff, 1e-6);
}

TEST(BlockOperator, ParameterRangeChecked) {
  const auto disc = build_discretization(2, 0);
  const Vector z(disc.fine_mesh().num_vertices(), 0.0);
  EXPECT_THROW(build_scaled_system(disc.fine_mesh(), disc.fine(), z, 0.0, 0.1), ConfigError);
  EXPECT_THROW(build_scaled_system(disc.fine_mesh(), disc.fine(), z, 0.1, 1.5), ConfigError);
  EXPECT_THROW(BlockPreconditioner(disc, 2.0, 0.1), ConfigError);
}

TEST(ScaledRhs, Examples) {
  const auto r = build_scaled_rhs(Vector{1.0}, Vector{1.0}, 1.0 / 16.0, 0.25);
  // tau^1/4 eps^1/2 = 1/2 * 1/2
  EXPECT_DOUBLE_EQ(r[0], 4.0);
  EXPECT_DOUBLE_EQ(r[1], 0.25);
  const auto u = unscale_solution(r, 1.0 / 16.0, 0.25);
  EXPECT_DOUBLE_EQ(u.delta_mu[0], 16.0);
  EXPECT_DOUBLE_EQ(u.delta_phi[0], 0.0625);
  EXPECT_THROW(build_scaled_rhs(Vector{1.0}, Vector{1.0, 2.0}, 0.1, 0.1), SolverError);
  EXPECT_THROW(unscale_solution(Vector{1.0, 2.0, 3.0}, 0.1, 0.1), SolverError);
}

TEST(ScaledRhs, ScalingSolvesTheUnscaledSystem) {
  const auto disc = build_discretization(2, 1);
  const auto& m = disc.fine_mesh();
  const auto phi = oracle::random_vector(m.num_vertices(), 5);
  const double tau = 0.002 / 64, eps = 0.0625;
  const auto op = build_scaled_system(m, disc.fine(), phi, tau, eps);
  const Eigen::MatrixXd b = oracle::materialize(op);
  const auto f = oracle::random_vector(m.num_vertices(), 6);
  const auto g = oracle::random_vector(m.num_vertices(), 7);
  Vector fp = f, gp = g;
  project_load(disc.fine().mean, fp);
  project_load(disc.fine().mean, gp);
  const auto rhs = build_scaled_rhs(fp, gp, tau, eps);
  const Eigen::VectorXd x = b.fullPivLu().solve(oracle::vec(rhs));
  const auto d = unscale_solution(oracle::stdvec(x), tau, eps);
  // unscaled equations: tau eps (K + cc^T) dmu + M dphi = F, M dmu - (J/eps + eps (K + cc^T)) dphi = G
  const Eigen::MatrixXd k = oracle::dense_stiffness(m);
  const Eigen::VectorXd c = oracle::vec(disc.fine().mean);
  const Eigen::MatrixXd kc = k + c * c.transpose();
  const Eigen::MatrixXd mm = oracle::dense_mass(m);
  const auto n = c.size();
  const Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(n, n) - Eigen::VectorXd::Ones(n) * c.transpose();
  const Eigen::MatrixXd j = pi.transpose() * oracle::dense_weighted_mass(m, phi, [](double u) { return 3 * u * u; }) * pi;
  const Eigen::VectorXd dmu = oracle::vec(d.delta_mu), dphi = oracle::vec(d.delta_phi);
  const Eigen::VectorXd r1 = tau * eps * kc * dmu + mm * dphi - oracle::vec(fp);
  const Eigen::VectorXd r2 = mm * dmu - (j / eps + eps * kc) * dphi - oracle::vec(gp);
  EXPECT_LT(r1.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(r2.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(std::abs(c.dot(dmu)), 1e-12);
  EXPECT_LT(std::abs(c.dot(dphi)), 1e-12);
}

TEST(Preconditioner, BlockDiagonalSymmetric) {
  const auto disc = build_discretization(2, 2);
  const BlockPreconditioner pre(disc, 0.002 / 64, 0.0625);
  const Eigen::MatrixXd p = oracle::materialize(pre);
  const auto n = static_cast<Eigen::Index>(pre.block_size());
  EXPECT_EQ(p.topRightCorner(n, n).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(p.bottomLeftCorner(n, n).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10 * p.cwiseAbs().maxCoeff());
  EXPECT_DOUBLE_EQ(pre.top().gamma(), std::sqrt(0.002 / 64));
  EXPECT_DOUBLE_EQ(pre.bottom().gamma(), std::sqrt(0.002 / 64) * 0.0625 * 0.0625);
}

TEST(Preconditioner, EqualBlocksWhenTauAndEpsAreOne) {
  const auto disc = build_discretization(2, 1);
  const BlockPreconditioner pre(disc, 1.0, 1.0);
  const Eigen::MatrixXd p = oracle::materialize(pre);
  const auto n = static_cast<Eigen::Index>(pre.block_size());
  EXPECT_LT((p.topLeftCorner(n, n) - p.bottomRightCorner(n, n)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NewtonSystem, ZeroRightHandSide) {
  const auto disc = build_discretization(2, 2);
  const std::size_t n = disc.fine_mesh().num_vertices();
  const auto op = build_scaled_system(disc.fine_mesh(), disc.fine(), Vector(n, 0.5), 0.002 / 64, 0.0625);
  const BlockPreconditioner pre(disc, 0.002 / 64, 0.0625);
  const auto d = solve_newton_system(op, pre, Vector(2 * n, 0.0));
  EXPECT_EQ(d.report.iterations, 0);
  EXPECT_EQ(norm_inf(d.delta_mu), 0.0);
  EXPECT_EQ(norm_inf(d.delta_phi), 0.0);
}

TEST(NewtonSystem, IterationCountsAndMeanFreeCorrections) {
  const double tau = 0.002 / 64;
  int count_wide = 0, count_thin = 0;
  for (double eps : {0.0625, 0.001}) {
    const auto disc = build_discretization(2, 3);
    const auto& m = disc.fine_mesh();
    const auto phi = interpolate_nodal(m, cosine_initial).values;
    const auto r = nonlinear_residual(m, disc.fine(), phi, Vector(m.num_vertices(), 0.0), phi, tau, eps);
    const auto op = build_scaled_system(m, disc.fine(), phi, tau, eps);
    const BlockPreconditioner pre(disc, tau, eps);
    Vector g = r.g;
    for (double& v : g) v = -v;
    Vector f = r.f;
    for (double& v : f) v = -v;
    const auto d = solve_newton_system(op, pre, build_scaled_rhs(f, g, tau, eps), {1e-7, 500});
    EXPECT_TRUE(d.report.converged);
    EXPECT_LT(std::abs(dot(disc.fine().mean, d.delta_phi)), 1e-15);
    EXPECT_LT(std::abs(dot(disc.fine().mean, d.delta_mu)), 1e-9);
    (eps > 0.01 ? count_wide : count_thin) = d.report.iterations;
  }
  EXPECT_GE(count_wide, 5);
  EXPECT_LE(count_wide, 60);
  EXPECT_GT(count_thin, count_wide);
  EXPECT_LE(count_thin, 150);
}

TEST(NewtonSystem, DimensionMismatch) {
  const auto disc = build_discretization(2, 1);
  const std::size_t n = disc.fine_mesh().num_vertices();
  const auto op = build_scaled_system(disc.fine_mesh(), disc.fine(), Vector(n, 0.0), 0.1, 0.1);
  const BlockPreconditioner pre(disc, 0.1, 0.1);
  EXPECT_THROW(solve_newton_system(op, pre, Vector(n, 0.0)), SolverError);
}
