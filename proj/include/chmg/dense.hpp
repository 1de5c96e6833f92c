#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "chmg/errors.hpp"
#include "chmg/sparse.hpp"

namespace chmg {

/// Row-major square dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static DenseMatrix from_sparse(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw NumericalError("DenseMatrix: sparse input is not square");
    DenseMatrix d(a.rows());
    const auto ro = a.row_offsets();
    const auto ci = a.column_indices();
    const auto v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) d(i, static_cast<std::size_t>(ci[k])) = v[k];
    }
    return d;
  }

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += data_[i * n_ + j] * x[j];
      y[i] = s;
    }
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  explicit CholeskyFactor(const DenseMatrix& a) : n_(a.size()), l_(a.size()) {
    for (std::size_t j = 0; j < n_; ++j) {
      double d = a(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw NumericalError("CholeskyFactor: matrix is not positive definite (pivot " + std::to_string(j) +
                             ")");
      }
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = a(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
        l_(i, j) = s / ljj;
      }
    }
  }

  std::size_t size() const { return n_; }

  void solve_in_place(std::span<double> x) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = x[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * x[k];
      x[i] = s / l_(i, i);
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = x[i];
      for (std::size_t k = i + 1; k < n_; ++k) s -= l_(k, i) * x[k];
      x[i] = s / l_(i, i);
    }
  }

  Vector solve(std::span<const double> b) const {
    Vector x(b.begin(), b.end());
    solve_in_place(x);
    return x;
  }

 private:
  std::size_t n_ = 0;
  DenseMatrix l_;
};

/// Solve A x = b for symmetric positive definite A.
inline Vector dense_solve(const DenseMatrix& a, std::span<const double> b) {
  if (b.size() != a.size()) throw NumericalError("dense_solve: dimension mismatch");
  return CholeskyFactor(a).solve(b);
}

}  // namespace chmg
