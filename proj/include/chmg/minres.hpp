#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "chmg/errors.hpp"
#include "chmg/linear_operator.hpp"
#include "chmg/sparse.hpp"

namespace chmg {

struct MinresOptions {
  double rtol = 1e-7;
  int max_iterations = 500;
};

struct MinresReport {
  int iterations = 0;
  /// ||r_k||_{M^-1} / ||b||_{M^-1}, the quantity the stopping test uses.
  double relative_residual = 0.0;
  /// ||b - A x||_2 / ||b||_2, recomputed after the last iteration.
  double true_relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned MINRES for symmetric (possibly indefinite) A with a
/// symmetric positive definite preconditioner `pre` (applying M^-1).
/// Starts from x = 0 and stops when the preconditioned residual norm falls
/// below rtol times the preconditioned norm of b.
template <LinearMap Op, LinearMap Pre>
MinresReport minres(const Op& a, const Pre& pre, std::span<const double> b, std::span<double> x,
                    const MinresOptions& opts = {}) {
  const std::size_t n = a.size();
  if (b.size() != n || x.size() != n || pre.size() != n) throw SolverError("minres: dimension mismatch");
  std::fill(x.begin(), x.end(), 0.0);

  MinresReport report;
  Vector r1(b.begin(), b.end());
  Vector y(n);
  pre.apply(r1, y);
  double beta1 = dot(r1, y);
  if (beta1 < 0.0) throw PreconditionerError("minres: preconditioner is not positive definite");
  if (beta1 == 0.0) {
    report.converged = true;
    return report;
  }
  beta1 = std::sqrt(beta1);

  Vector r2 = r1;
  Vector v(n), w(n, 0.0), w1(n), w2(n, 0.0);
  double beta = beta1, oldb = 0.0;
  double dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  const double tiny = std::numeric_limits<double>::min();

  for (int itn = 1; itn <= opts.max_iterations; ++itn) {
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    a.apply(v, y);
    if (itn >= 2) axpy(-beta / oldb, r1, y);
    const double alfa = dot(v, y);
    axpy(-alfa / beta, r2, y);
    std::swap(r1, r2);
    std::copy(y.begin(), y.end(), r2.begin());
    pre.apply(r2, y);
    oldb = beta;
    beta = dot(r2, y);
    if (beta < 0.0) throw PreconditionerError("minres: preconditioner is not positive definite");
    beta = std::sqrt(beta);

    // Apply the previous rotation, then compute and apply the new one.
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    if (gamma == 0.0) {
      throw SolverError("minres: breakdown (singular tridiagonal) at iteration " + std::to_string(itn));
    }
    gamma = std::max(gamma, tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    const double denom = 1.0 / gamma;
    std::swap(w1, w2);
    std::swap(w2, w);
    for (std::size_t i = 0; i < n; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
    axpy(phi, w, x);

    report.iterations = itn;
    report.relative_residual = phibar / beta1;
    if (report.relative_residual <= opts.rtol || beta == 0.0) {
      report.converged = report.relative_residual <= opts.rtol;
      if (beta == 0.0 && !report.converged) {
        throw SolverError("minres: breakdown with nonzero residual at iteration " + std::to_string(itn));
      }
      break;
    }
  }

  Vector ax(n);
  a.apply(x, ax);
  for (std::size_t i = 0; i < n; ++i) ax[i] = b[i] - ax[i];
  const double bnorm = norm2(b);
  report.true_relative_residual = bnorm > 0.0 ? norm2(ax) / bnorm : 0.0;
  return report;
}

}  // namespace chmg
