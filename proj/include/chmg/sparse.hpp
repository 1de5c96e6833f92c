#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "chmg/errors.hpp"

namespace chmg {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Dense vector helpers
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

/// y <- a x + y
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

// ---------------------------------------------------------------------------
// Compressed-row matrix
// ---------------------------------------------------------------------------

/// Compressed-row sparse matrix. Column indices are sorted and unique within
/// each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
               std::vector<int> column_indices, std::vector<double> values)
      : n_rows_(n_rows),
        n_cols_(n_cols),
        row_offsets_(std::move(row_offsets)),
        column_indices_(std::move(column_indices)),
        values_(std::move(values)) {}

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t size() const { return n_rows_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const int> column_indices() const { return column_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Entry (i, j); zero when outside the pattern.
  double at(std::size_t i, std::size_t j) const {
    const auto first = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<int>(j));
    if (it == last || *it != static_cast<int>(j)) return 0.0;
    return values_[static_cast<std::size_t>(it - column_indices_.begin())];
  }

  /// Position of (i, j) in values(); throws if outside the pattern.
  std::size_t position(std::size_t i, std::size_t j) const {
    const auto first = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<int>(j));
    if (it == last || *it != static_cast<int>(j)) {
      throw AssemblyError("SparseMatrix: entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside sparsity pattern");
    }
    return static_cast<std::size_t>(it - column_indices_.begin());
  }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == n_cols_ && y.size() == n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        s += values_[k] * x[static_cast<std::size_t>(column_indices_[k])];
      }
      y[i] = s;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(n_rows_);
    apply(x, y);
    return y;
  }

  /// y = A^T x
  void apply_transpose(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == n_rows_ && y.size() == n_cols_);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < n_rows_; ++i) {
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        y[static_cast<std::size_t>(column_indices_[k])] += values_[k] * x[i];
      }
    }
  }

  Vector diagonal() const {
    Vector d(std::min(n_rows_, n_cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  Vector row_sums() const {
    Vector s(n_rows_, 0.0);
    for (std::size_t i = 0; i < n_rows_; ++i) {
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s[i] += values_[k];
    }
    return s;
  }

  /// Same pattern, all values zero.
  SparseMatrix zeros_like() const {
    SparseMatrix z = *this;
    std::fill(z.values_.begin(), z.values_.end(), 0.0);
    return z;
  }

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<int> column_indices_;
  std::vector<double> values_;
};

/// Coordinate-format accumulator. Duplicate entries are summed in insertion
/// order, so identical input sequences produce bitwise-identical matrices.
class TripletList {
 public:
  TripletList(std::size_t n_rows, std::size_t n_cols) : n_rows_(n_rows), n_cols_(n_cols) {}

  void reserve(std::size_t n) { entries_.reserve(n); }
  void add(int i, int j, double v) { entries_.push_back({i, j, v}); }

  SparseMatrix build() const {
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(entries_[a].row, entries_[a].col) < std::tie(entries_[b].row, entries_[b].col);
    });
    std::vector<std::size_t> offsets(n_rows_ + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(entries_.size());
    vals.reserve(entries_.size());
    int last_row = -1, last_col = -1;
    for (std::size_t idx : order) {
      const auto& e = entries_[idx];
      if (e.row == last_row && e.col == last_col) {
        vals.back() += e.value;
        continue;
      }
      cols.push_back(e.col);
      vals.push_back(e.value);
      ++offsets[static_cast<std::size_t>(e.row) + 1];
      last_row = e.row;
      last_col = e.col;
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return SparseMatrix(n_rows_, n_cols_, std::move(offsets), std::move(cols), std::move(vals));
  }

 private:
  struct Entry {
    int row;
    int col;
    double value;
  };
  std::size_t n_rows_;
  std::size_t n_cols_;
  std::vector<Entry> entries_;
};

/// alpha A + beta B (patterns merged).
inline SparseMatrix add(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw NumericalError("add: dimension mismatch");
  }
  TripletList t(a.rows(), a.cols());
  t.reserve(a.nnz() + b.nnz());
  for (const auto* m : {&a, &b}) {
    const double s = m == &a ? alpha : beta;
    const auto ro = m->row_offsets();
    const auto ci = m->column_indices();
    const auto v = m->values();
    for (std::size_t i = 0; i < m->rows(); ++i) {
      for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) t.add(static_cast<int>(i), ci[k], s * v[k]);
    }
  }
  return t.build();
}

inline SparseMatrix transpose(const SparseMatrix& a) {
  TripletList t(a.cols(), a.rows());
  t.reserve(a.nnz());
  const auto ro = a.row_offsets();
  const auto ci = a.column_indices();
  const auto v = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) t.add(ci[k], static_cast<int>(i), v[k]);
  }
  return t.build();
}

/// General sparse product A B.
inline SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw NumericalError("multiply: dimension mismatch");
  TripletList t(a.rows(), b.cols());
  const auto aro = a.row_offsets();
  const auto aci = a.column_indices();
  const auto av = a.values();
  const auto bro = b.row_offsets();
  const auto bci = b.column_indices();
  const auto bv = b.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = aro[i]; k < aro[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(aci[k]);
      for (std::size_t l = bro[j]; l < bro[j + 1]; ++l) t.add(static_cast<int>(i), bci[l], av[k] * bv[l]);
    }
  }
  return t.build();
}

/// P^T A P, the Galerkin coarse operator.
inline SparseMatrix galerkin_product(const SparseMatrix& p, const SparseMatrix& a) {
  return multiply(transpose(p), multiply(a, p));
}

/// Largest |A(i,j) - A(j,i)|.
inline double asymmetry(const SparseMatrix& a) {
  double m = 0.0;
  const auto ro = a.row_offsets();
  const auto ci = a.column_indices();
  const auto v = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) {
      m = std::max(m, std::abs(v[k] - a.at(static_cast<std::size_t>(ci[k]), i)));
    }
  }
  return m;
}

/// Largest entrywise |A - B| over the union of patterns.
inline double max_abs_difference(const SparseMatrix& a, const SparseMatrix& b) {
  const auto d = add(1.0, a, -1.0, b);
  return norm_inf(d.values());
}

// ---------------------------------------------------------------------------
// Gauss-Seidel smoothing
// ---------------------------------------------------------------------------

enum class SweepDirection { forward, backward };

/// One in-place lexicographic Gauss-Seidel sweep for A x = b.
inline void gauss_seidel_sweep(const SparseMatrix& a, std::span<double> x, std::span<const double> b,
                               SweepDirection direction) {
  const auto n = a.rows();
  const auto ro = a.row_offsets();
  const auto ci = a.column_indices();
  const auto v = a.values();
  auto relax = [&](std::size_t i) {
    double diag = 0.0;
    double s = b[i];
    for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(ci[k]);
      if (j == i) {
        diag = v[k];
      } else {
        s -= v[k] * x[j];
      }
    }
    if (diag == 0.0) {
      throw NumericalError("gauss_seidel_sweep: zero diagonal in row " + std::to_string(i));
    }
    x[i] = s / diag;
  };
  if (direction == SweepDirection::forward) {
    for (std::size_t i = 0; i < n; ++i) relax(i);
  } else {
    for (std::size_t i = n; i-- > 0;) relax(i);
  }
}

/// Coordinate-format MatrixMarket dump (general, 1-based).
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  const auto old = os.precision(17);
  const auto ro = a.row_offsets();
  const auto ci = a.column_indices();
  const auto v = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) os << i + 1 << ' ' << ci[k] + 1 << ' ' << v[k] << '\n';
  }
  os.precision(old);
}

}  // namespace chmg
