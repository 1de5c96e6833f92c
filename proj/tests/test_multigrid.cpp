#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace chmg;

namespace {

// Error propagation E = I - B A of one cycle, |E|_A via the symmetric form.
double a_norm_contraction(const MultigridCycle& v) {
  const Eigen::MatrixXd b = oracle::materialize(v);
  const Eigen::MatrixXd a = oracle::dense(v.matrix());
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(a.rows(), a.cols()) - b * a;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd s = l.transpose() * e * l.transpose().inverse();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
  return svd.singularValues()(0);
}

}  // namespace

TEST(Prolongation, RowsInterpolateMidpoints) {
  for (int dim : {2, 3}) {
    const auto h = build_hierarchy(dim, 2);
    for (int l = 1; l <= 2; ++l) {
      const auto p = build_prolongation(h, l);
      EXPECT_EQ(p.rows(), h[l].num_vertices());
      EXPECT_EQ(p.cols(), h[l - 1].num_vertices());
      for (double s : p.row_sums()) EXPECT_DOUBLE_EQ(s, 1.0);
      // P applied to coarse coordinates gives the fine coordinates
      for (int axis = 0; axis < dim; ++axis) {
        Vector xc(h[l - 1].num_vertices());
        for (std::size_t i = 0; i < xc.size(); ++i) xc[i] = h[l - 1].vertices[i][static_cast<std::size_t>(axis)];
        const auto xf = p * xc;
        for (std::size_t i = 0; i < xf.size(); ++i) {
          EXPECT_DOUBLE_EQ(xf[i], h[l].vertices[i][static_cast<std::size_t>(axis)]);
        }
      }
    }
  }
}

TEST(Prolongation, LevelRangeChecked) {
  const auto h = build_hierarchy(2, 1);
  EXPECT_THROW(build_prolongation(h, 0), ConfigError);
  EXPECT_THROW(build_prolongation(h, 2), ConfigError);
}

TEST(Prolongation, GalerkinCoarseOperator) {
  const auto disc = build_discretization(2, 4);
  const double gamma = std::sqrt(0.002 / 64);
  for (int l = 1; l <= 4; ++l) {
    const auto& p = disc.prolongations[static_cast<std::size_t>(l)];
    const auto fine = add(gamma, disc.level(l).stiffness, 1.0, disc.level(l).mass);
    const auto coarse = add(gamma, disc.level(l - 1).stiffness, 1.0, disc.level(l - 1).mass);
    EXPECT_LT(max_abs_difference(galerkin_product(p, fine), coarse), 1e-11);
  }
}

TEST(Cycle, ZeroGammaUsesMass) {
  const auto disc = build_discretization(2, 2);
  const MultigridCycle v(disc, 0.0);
  EXPECT_LT(max_abs_difference(v.matrix(), disc.fine().mass), 1e-16);
  EXPECT_THROW(MultigridCycle(disc, -1.0), ConfigError);
  EXPECT_THROW(MultigridCycle(disc, 1.0, -1, 4), ConfigError);
  EXPECT_THROW(MultigridCycle(disc, 1.0, 4, 4, 3), ConfigError);
}

TEST(Cycle, ZeroLoadGivesZero) {
  const auto disc = build_discretization(2, 3);
  const MultigridCycle v(disc, 0.1);
  Vector x(v.size(), 1.0);
  v.apply(Vector(v.size(), 0.0), x);
  EXPECT_EQ(norm_inf(x), 0.0);
}

TEST(Cycle, SingleLevelIsTheDenseSolve) {
  const auto disc = build_discretization(2, 0);
  const MultigridCycle v(disc, 0.3);
  const auto b = oracle::random_vector(v.size(), 2);
  Vector x(v.size());
  v.apply(b, x);
  const Eigen::VectorXd ref = oracle::dense(v.matrix()).llt().solve(oracle::vec(b));
  EXPECT_LT((oracle::vec(x) - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cycle, SymmetricPositiveDefinite) {
  for (int dim : {2, 3}) {
    const auto disc = build_discretization(dim, dim == 2 ? 3 : 1);
    for (double gamma : {std::sqrt(0.002 / 64), std::sqrt(0.002 / 64) * 1e-6}) {
      const MultigridCycle v(disc, gamma);
      const Eigen::MatrixXd b = oracle::materialize(v);
      EXPECT_LT((b - b.transpose()).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()));
      EXPECT_GT(es.eigenvalues()(0), 0.0);
    }
  }
}

TEST(Cycle, ContractionIsLevelIndependent) {
  const double tau = 0.002 / 64;
  for (double eps : {0.0625, 0.001}) {
    for (double gamma : {std::sqrt(tau), std::sqrt(tau) * eps * eps}) {
      for (int level = 2; level <= 4; ++level) {
        const auto disc = build_discretization(2, level);
        const MultigridCycle v(disc, gamma);
        EXPECT_LT(a_norm_contraction(v), 0.2) << "eps " << eps << " gamma " << gamma << " level " << level;
      }
    }
  }
}

TEST(Cycle, RepeatedCyclesConverge) {
  const auto disc = build_discretization(3, 2);
  const MultigridCycle v(disc, 0.05);
  const auto& a = v.matrix();
  const auto b = oracle::random_vector(v.size(), 8);
  Vector x(v.size(), 0.0), r(v.size()), e(v.size());
  double r0 = norm2(b), rk = r0;
  for (int k = 0; k < 8; ++k) {
    a.apply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    rk = norm2(r);
    v.apply(r, e);
    axpy(1.0, e, x);
  }
  EXPECT_LT(rk, 1e-5 * r0);
}
