#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "chmg/assembly.hpp"
#include "chmg/errors.hpp"
#include "chmg/jacobian.hpp"
#include "chmg/mesh.hpp"
#include "chmg/sparse.hpp"

namespace chmg {

inline constexpr std::size_t max_dense_block = 2000;

using DenseEigen = Eigen::MatrixXd;

inline DenseEigen to_eigen(const SparseMatrix& a) {
  DenseEigen d = DenseEigen::Zero(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      d(static_cast<Eigen::Index>(i), a.column_indices()[k]) += a.values()[k];
    }
  }
  return d;
}

struct DenseSystem {
  DenseEigen b;
  DenseEigen p;
  DenseEigen p_star;
};

/// Dense B, P and P* on one mesh:
///   B  = [[s (K + c c^T), M], [M, -3 s M - s eps^2 (K + c c^T)]],  s = sqrt(tau)
///   P  = blockdiag(s (K + c c^T) + M, s eps^2 (K + c c^T) + M)
///   P* = blockdiag(s K + M, s eps^2 K + M)
inline DenseSystem assemble_dense_BP(const MeshLevel& mesh, double tau, double eps) {
  check_time_parameters(tau, eps, "assemble_dense_BP");
  const std::size_t n = mesh.num_vertices();
  if (n > max_dense_block) {
    throw ConfigError("assemble_dense_BP: " + std::to_string(n) + " vertices exceeds the dense limit of " +
                      std::to_string(max_dense_block));
  }
  const auto ops = build_level_operators(mesh);
  const DenseEigen k = to_eigen(ops.stiffness);
  const DenseEigen m = to_eigen(ops.mass);
  const Eigen::Map<const Eigen::VectorXd> c(ops.mean.data(), static_cast<Eigen::Index>(n));
  const DenseEigen kc = k + c * c.transpose();
  const double s = std::sqrt(tau);
  const double s2 = s * eps * eps;
  const auto ni = static_cast<Eigen::Index>(n);

  DenseSystem out;
  out.b = DenseEigen::Zero(2 * ni, 2 * ni);
  out.b.topLeftCorner(ni, ni) = s * kc;
  out.b.topRightCorner(ni, ni) = m;
  out.b.bottomLeftCorner(ni, ni) = m;
  out.b.bottomRightCorner(ni, ni) = -3.0 * s * m - s2 * kc;

  out.p = DenseEigen::Zero(2 * ni, 2 * ni);
  out.p.topLeftCorner(ni, ni) = s * kc + m;
  out.p.bottomRightCorner(ni, ni) = s2 * kc + m;

  out.p_star = DenseEigen::Zero(2 * ni, 2 * ni);
  out.p_star.topLeftCorner(ni, ni) = s * k + m;
  out.p_star.bottomRightCorner(ni, ni) = s2 * k + m;
  return out;
}

/// Eigenvalues of P^-1 B from the symmetric-definite pencil (B, P), sorted.
inline std::vector<double> generalized_eigenvalues(const DenseEigen& b, const DenseEigen& p) {
  if (b.rows() != p.rows() || b.cols() != p.cols() || b.rows() != b.cols()) {
    throw ConfigError("generalized_eigenvalues: shape mismatch");
  }
  Eigen::LLT<DenseEigen> llt(p);
  if (llt.info() != Eigen::Success) throw NumericalError("generalized_eigenvalues: P is not positive definite");
  // L^-1 B L^-T has the same spectrum as P^-1 B.
  DenseEigen t = llt.matrixL().solve(b);
  DenseEigen s = llt.matrixL().solve(t.transpose()).transpose();
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<DenseEigen> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("generalized_eigenvalues: eigensolver failed");
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

/// All |lambda| of P^-1 B, sorted ascending.
inline std::vector<double> eigenvalues_preconditioned(const DenseEigen& b, const DenseEigen& p) {
  auto lam = generalized_eigenvalues(b, p);
  for (double& v : lam) v = std::abs(v);
  std::sort(lam.begin(), lam.end());
  return lam;
}

/// Eigenvalues kappa_j of (K + c c^T) x = kappa M x, sorted.
inline std::vector<double> augmented_stiffness_eigenvalues(const MeshLevel& mesh) {
  if (mesh.num_vertices() > max_dense_block) throw ConfigError("augmented_stiffness_eigenvalues: mesh too large");
  const auto ops = build_level_operators(mesh);
  const Eigen::Map<const Eigen::VectorXd> c(ops.mean.data(), static_cast<Eigen::Index>(ops.mean.size()));
  const DenseEigen kc = to_eigen(ops.stiffness) + c * c.transpose();
  return generalized_eigenvalues(kc, to_eigen(ops.mass));
}

/// Both eigenvalues of
///   C = diag(s k + 1, s eps^2 k + 1)^-1 [[s k, 1], [1, -3 s - s eps^2 k]].
/// They are real: C is similar to a symmetric matrix.
inline std::array<double, 2> reduced_block_eigenvalues(double kappa, double tau, double eps) {
  const double s = std::sqrt(tau);
  const double d1 = s * kappa + 1.0;
  const double d2 = s * eps * eps * kappa + 1.0;
  const double a = s * kappa / d1;
  const double d = (-3.0 * s - s * eps * eps * kappa) / d2;
  const double bc = 1.0 / (d1 * d2);
  const double half_tr = 0.5 * (a + d);
  const double disc = std::sqrt(0.25 * (a - d) * (a - d) + bc);
  const double hi = half_tr + disc;
  // a d - bc = det; use it for the small root to avoid cancellation.
  const double lo = (a * d - bc) / hi;
  return {std::min(lo, hi), std::max(lo, hi)};
}

/// Spectrum of P^-1 B assembled from the 2x2 reductions, sorted.
inline std::vector<double> reduced_spectrum(const std::vector<double>& kappas, double tau, double eps) {
  std::vector<double> out;
  out.reserve(2 * kappas.size());
  for (double k : kappas) {
    const auto e = reduced_block_eigenvalues(k, tau, eps);
    out.push_back(e[0]);
    out.push_back(e[1]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline constexpr double spectrum_slack = 1e-12;

struct SpectrumReport {
  int dimension = 2;
  int level = 0;
  double tau = 0.0;
  double eps = 0.0;
  std::vector<double> abs_eigenvalues;       // P^-1 B
  std::vector<double> abs_eigenvalues_star;  // P*^-1 B
  double min_abs = 0.0;
  double max_abs = 0.0;
  double min_abs_star = 0.0;
  double max_abs_star = 0.0;
  double bound_low = 0.0;
  double bound_high = 4.0;
  bool pass_low = false;
  bool pass_high = false;
  bool star_positive = false;
  bool pass() const { return pass_low && pass_high; }
};

inline double eigenvalue_lower_bound(double tau, double eps) { return std::max(std::sqrt(tau), eps) / 8.0; }

inline SpectrumReport check_bounds(int dimension, int level, double tau, double eps, std::vector<double> abs_lambda,
                                   std::vector<double> abs_lambda_star, double slack = spectrum_slack) {
  SpectrumReport r;
  r.dimension = dimension;
  r.level = level;
  r.tau = tau;
  r.eps = eps;
  r.abs_eigenvalues = std::move(abs_lambda);
  r.abs_eigenvalues_star = std::move(abs_lambda_star);
  std::sort(r.abs_eigenvalues.begin(), r.abs_eigenvalues.end());
  std::sort(r.abs_eigenvalues_star.begin(), r.abs_eigenvalues_star.end());
  r.bound_low = eigenvalue_lower_bound(tau, eps);
  r.bound_high = 4.0;
  if (!r.abs_eigenvalues.empty()) {
    r.min_abs = r.abs_eigenvalues.front();
    r.max_abs = r.abs_eigenvalues.back();
    r.pass_low = r.min_abs >= r.bound_low - slack;
    r.pass_high = r.max_abs <= r.bound_high + slack;
  }
  if (!r.abs_eigenvalues_star.empty()) {
    r.min_abs_star = r.abs_eigenvalues_star.front();
    r.max_abs_star = r.abs_eigenvalues_star.back();
    r.star_positive = r.min_abs_star > 0.0 && std::isfinite(r.max_abs_star);
  }
  return r;
}

/// Builds the mesh, both spectra and the bound check for one point.
inline SpectrumReport analyze_spectrum(int dimension, int level, double tau, double eps, double slack = spectrum_slack) {
  const auto meshes = build_hierarchy(dimension, level);
  const auto sys = assemble_dense_BP(meshes.levels.back(), tau, eps);
  return check_bounds(dimension, level, tau, eps, eigenvalues_preconditioned(sys.b, sys.p),
                      eigenvalues_preconditioned(sys.b, sys.p_star), slack);
}

inline void write_spectrum_header(std::ostream& os) {
  os << "level,tau,eps,min_abs_lambda,max_abs_lambda,bound_low,bound_high,pass\n";
}

inline void write_spectrum_row(std::ostream& os, const SpectrumReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%d\n", r.level, r.tau, r.eps, r.min_abs,
                r.max_abs, r.bound_low, r.bound_high, r.pass() ? 1 : 0);
  os << buf;
}

}  // namespace chmg
