#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include "chmg/sparse.hpp"

namespace chmg {

/// Anything with a square action y = A x.
template <class T>
concept LinearMap = requires(const T& a, std::span<const double> x, std::span<double> y) {
  { a.size() } -> std::convertible_to<std::size_t>;
  a.apply(x, y);
};

class IdentityOperator {
 public:
  explicit IdentityOperator(std::size_t n) : n_(n) {}
  std::size_t size() const { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const { std::copy(x.begin(), x.end(), y.begin()); }

 private:
  std::size_t n_;
};

/// A + sigma c c^T, with the rank-one term applied as c (c^T x).
template <LinearMap Op>
class RankOneAugmented {
 public:
  RankOneAugmented(const Op& a, std::span<const double> c, double sigma = 1.0) : a_(&a), c_(c), sigma_(sigma) {}
  std::size_t size() const { return a_->size(); }
  void apply(std::span<const double> x, std::span<double> y) const {
    a_->apply(x, y);
    axpy(sigma_ * dot(c_, x), c_, y);
  }

 private:
  const Op* a_;
  std::span<const double> c_;
  double sigma_;
};

/// Type-erased operator built from a callable.
class FunctionOperator {
 public:
  using Action = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionOperator(std::size_t n, Action action) : n_(n), action_(std::move(action)) {}
  std::size_t size() const { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const { action_(x, y); }

 private:
  std::size_t n_;
  Action action_;
};

template <LinearMap Op>
Vector apply(const Op& a, std::span<const double> x) {
  Vector y(a.size());
  a.apply(x, y);
  return y;
}

}  // namespace chmg
