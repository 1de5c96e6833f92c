#pragma once

#include <cmath>
#include <span>
#include <string>

#include "chmg/assembly.hpp"
#include "chmg/errors.hpp"
#include "chmg/minres.hpp"
#include "chmg/multigrid.hpp"
#include "chmg/sparse.hpp"

namespace chmg {

inline void check_time_parameters(double tau, double eps, const char* who) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ConfigError(std::string(who) + ": tau must lie in (0, 1], got " + std::to_string(tau));
  }
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw ConfigError(std::string(who) + ": eps must lie in (0, 1], got " + std::to_string(eps));
  }
}

/// How the weighted mass matrix J(phi) enters the (2,2) block.
enum class WeightedMassCoupling {
  /// Pi^T J Pi with Pi = I - 1 c^T. This is the Jacobian of the mean-free
  /// problem extended to the full space, so the solution has zero mean and
  /// coincides with the constrained Newton correction.
  mean_projected,
  /// J as assembled. With J = 3M this is exactly the model matrix B, but the
  /// constant mode then couples back into the mean-free part when phi^2 is
  /// not constant.
  as_assembled,
};

/// Scaled Newton operator on stacked vectors (u; v):
///
///   [ sqrt(tau) (K + c c^T)            M                                   ]
///   [ M          -sqrt(tau) J - sqrt(tau) eps^2 (K + c c^T)                ]
///
/// The rank-one terms are applied as c (c^T x).
class BlockOperator {
 public:
  BlockOperator(const LevelOperators& ops, SparseMatrix weighted_mass, double tau, double eps,
                WeightedMassCoupling coupling = WeightedMassCoupling::mean_projected)
      : ops_(&ops),
        j_(std::move(weighted_mass)),
        tau_(tau),
        eps_(eps),
        sqrt_tau_(std::sqrt(tau)),
        coupling_(coupling) {
    check_time_parameters(tau, eps, "BlockOperator");
    if (j_.rows() != ops.mass.rows()) throw AssemblyError("BlockOperator: J/M dimension mismatch");
  }

  std::size_t block_size() const { return ops_->mass.rows(); }
  std::size_t size() const { return 2 * block_size(); }
  double tau() const { return tau_; }
  double eps() const { return eps_; }
  WeightedMassCoupling coupling() const { return coupling_; }
  const SparseMatrix& weighted_mass() const { return j_; }
  const LevelOperators& operators() const { return *ops_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = block_size();
    const auto u = x.subspan(0, n);
    const auto v = x.subspan(n, n);
    auto top = y.subspan(0, n);
    auto bot = y.subspan(n, n);
    const auto& c = ops_->mean;
    Vector tmp(n);

    ops_->stiffness.apply(u, top);
    axpy(dot(c, u), c, top);
    scale(sqrt_tau_, top);
    ops_->mass.apply(v, tmp);
    axpy(1.0, tmp, top);

    ops_->mass.apply(u, bot);
    const double s2 = sqrt_tau_ * eps_ * eps_;
    ops_->stiffness.apply(v, tmp);
    axpy(dot(c, v), c, tmp);
    axpy(-s2, tmp, bot);
    if (coupling_ == WeightedMassCoupling::mean_projected) {
      Vector pv(v.begin(), v.end());
      remove_mean(c, pv);
      j_.apply(pv, tmp);
      project_load(c, tmp);
    } else {
      j_.apply(v, tmp);
    }
    axpy(-sqrt_tau_, tmp, bot);
  }

 private:
  const LevelOperators* ops_;
  SparseMatrix j_;
  double tau_;
  double eps_;
  double sqrt_tau_;
  WeightedMassCoupling coupling_;
};

/// Assemble J(phi_current) and wrap it in the scaled Newton operator.
inline BlockOperator build_scaled_system(const MeshLevel& mesh, const LevelOperators& ops,
                                         std::span<const double> phi_current, double tau, double eps,
                                         WeightedMassCoupling coupling = WeightedMassCoupling::mean_projected) {
  check_time_parameters(tau, eps, "build_scaled_system");
  SparseMatrix j = ops.mass.zeros_like();
  assemble_weighted_mass_into(mesh, phi_current, j);
  return BlockOperator(ops, std::move(j), tau, eps, coupling);
}

/// Block-diagonal preconditioner diag(V1, V2) where V1, V2 are single
/// V-cycles for sqrt(tau) K + M and sqrt(tau) eps^2 K + M.
class BlockPreconditioner {
 public:
  BlockPreconditioner(const Discretization& disc, double tau, double eps, int nu_pre = 4, int nu_post = 4)
      : top_(disc, std::sqrt(tau), nu_pre, nu_post), bottom_(disc, std::sqrt(tau) * eps * eps, nu_pre, nu_post) {
    check_time_parameters(tau, eps, "BlockPreconditioner");
  }

  std::size_t block_size() const { return top_.size(); }
  std::size_t size() const { return 2 * top_.size(); }
  const MultigridCycle& top() const { return top_; }
  const MultigridCycle& bottom() const { return bottom_; }

  void apply(std::span<const double> b, std::span<double> x) const {
    const std::size_t n = block_size();
    top_.apply(b.subspan(0, n), x.subspan(0, n));
    bottom_.apply(b.subspan(n, n), x.subspan(n, n));
  }

 private:
  MultigridCycle top_;
  MultigridCycle bottom_;
};

/// Row scaling of the Newton loads: (tau^-1/4 eps^-1/2 F; tau^1/4 eps^1/2 G).
inline Vector build_scaled_rhs(std::span<const double> f, std::span<const double> g, double tau, double eps) {
  if (f.size() != g.size()) throw SolverError("build_scaled_rhs: block size mismatch");
  const double s = std::pow(tau, 0.25) * std::sqrt(eps);
  Vector rhs(2 * f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    rhs[i] = f[i] / s;
    rhs[f.size() + i] = g[i] * s;
  }
  return rhs;
}

struct NewtonCorrection {
  Vector delta_mu;
  Vector delta_phi;
  MinresReport report;
  /// |c^T delta| of the raw MINRES output before the mean was removed.
  double mean_defect_mu = 0.0;
  double mean_defect_phi = 0.0;
};

/// Undo the change of variables: delta_mu = tau^-1/4 eps^-1/2 x_top,
/// delta_phi = tau^1/4 eps^1/2 x_bottom.
inline NewtonCorrection unscale_solution(std::span<const double> x, double tau, double eps) {
  if (x.size() % 2 != 0) throw SolverError("unscale_solution: odd stacked length");
  const std::size_t n = x.size() / 2;
  const double s = std::pow(tau, 0.25) * std::sqrt(eps);
  NewtonCorrection out{Vector(n), Vector(n), {}};
  for (std::size_t i = 0; i < n; ++i) {
    out.delta_mu[i] = x[i] / s;
    out.delta_phi[i] = x[n + i] * s;
  }
  return out;
}

/// MINRES on the scaled system followed by unscaling. The exact correction
/// is mean-free; the residual mean left by the inexact solve is recorded and
/// then removed so that mass is conserved to rounding.
inline NewtonCorrection solve_newton_system(const BlockOperator& op, const BlockPreconditioner& pre,
                                            std::span<const double> rhs, const MinresOptions& opts = {}) {
  if (rhs.size() != op.size() || pre.size() != op.size()) {
    throw SolverError("solve_newton_system: dimension mismatch");
  }
  Vector x(op.size());
  const MinresReport report = minres(op, pre, rhs, x, opts);
  NewtonCorrection out = unscale_solution(x, op.tau(), op.eps());
  out.report = report;
  const auto& c = op.operators().mean;
  out.mean_defect_mu = std::abs(dot(c, out.delta_mu));
  out.mean_defect_phi = std::abs(dot(c, out.delta_phi));
  remove_mean(c, out.delta_mu);
  remove_mean(c, out.delta_phi);
  return out;
}

}  // namespace chmg
