#pragma once

#include <span>
#include <vector>

#include "chmg/assembly.hpp"
#include "chmg/dense.hpp"
#include "chmg/errors.hpp"
#include "chmg/mesh.hpp"
#include "chmg/sparse.hpp"

namespace chmg {

/// Canonical embedding of level fine_level - 1 into level fine_level:
/// persisting vertices copy, edge midpoints average their two parents.
inline SparseMatrix build_prolongation(const MeshHierarchy& meshes, int fine_level) {
  if (fine_level < 1 || fine_level > meshes.finest()) {
    throw ConfigError("build_prolongation: fine level " + std::to_string(fine_level) + " out of range");
  }
  const auto& parents = meshes.parents.at(static_cast<std::size_t>(fine_level));
  const auto& fine = meshes[fine_level];
  const auto& coarse = meshes[fine_level - 1];
  if (parents.size() != fine.num_vertices()) throw ConfigError("build_prolongation: missing parent data");
  TripletList t(fine.num_vertices(), coarse.num_vertices());
  t.reserve(2 * fine.num_vertices());
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const auto& p = parents[i];
    if (p.first < 0) throw ConfigError("build_prolongation: vertex " + std::to_string(i) + " has no parent");
    if (p.is_midpoint()) {
      t.add(static_cast<int>(i), p.first, 0.5);
      t.add(static_cast<int>(i), p.second, 0.5);
    } else {
      t.add(static_cast<int>(i), p.first, 1.0);
    }
  }
  return t.build();
}

/// Everything that depends only on the mesh hierarchy: per-level K, M, c and
/// the prolongations between consecutive levels.
struct Discretization {
  MeshHierarchy meshes;
  std::vector<LevelOperators> ops;
  std::vector<SparseMatrix> prolongations;  // [l] maps l - 1 -> l; [0] empty

  int finest() const { return meshes.finest(); }
  const MeshLevel& mesh(int l) const { return meshes[l]; }
  const LevelOperators& level(int l) const { return ops.at(static_cast<std::size_t>(l)); }
  const MeshLevel& fine_mesh() const { return meshes.levels.back(); }
  const LevelOperators& fine() const { return ops.back(); }
};

inline Discretization build_discretization(MeshHierarchy meshes) {
  Discretization d;
  d.meshes = std::move(meshes);
  for (const auto& m : d.meshes.levels) d.ops.push_back(build_level_operators(m));
  d.prolongations.emplace_back();
  for (int l = 1; l <= d.meshes.finest(); ++l) d.prolongations.push_back(build_prolongation(d.meshes, l));
  return d;
}

inline Discretization build_discretization(int dimension, int finest_level) {
  return build_discretization(build_hierarchy(dimension, finest_level));
}

/// Geometric multigrid V(nu_pre, nu_post) cycle for gamma K + M.
///
/// One application is one cycle from a zero initial guess: forward
/// Gauss-Seidel before restriction, backward Gauss-Seidel after
/// prolongation, Cholesky on level 0. The resulting map b -> x is linear,
/// symmetric and positive definite, so it is a valid MINRES preconditioner.
class MultigridCycle {
 public:
  /// Uses levels 0..finest_level of `disc` (all levels when negative).
  MultigridCycle(const Discretization& disc, double gamma, int nu_pre = 4, int nu_post = 4, int finest_level = -1)
      : gamma_(gamma), nu_pre_(nu_pre), nu_post_(nu_post) {
    if (!(gamma >= 0.0)) throw ConfigError("MultigridCycle: gamma must be nonnegative");
    if (nu_pre < 0 || nu_post < 0) throw ConfigError("MultigridCycle: negative sweep count");
    if (finest_level < 0) finest_level = disc.finest();
    if (finest_level > disc.finest()) throw ConfigError("MultigridCycle: finest level out of range");
    for (int l = 0; l <= finest_level; ++l) {
      const auto& ops = disc.level(l);
      matrices_.push_back(add(gamma, ops.stiffness, 1.0, ops.mass));
      prolongations_.push_back(disc.prolongations.at(static_cast<std::size_t>(l)));
    }
    coarse_ = CholeskyFactor(DenseMatrix::from_sparse(matrices_.front()));
  }

  double gamma() const { return gamma_; }
  int nu_pre() const { return nu_pre_; }
  int nu_post() const { return nu_post_; }
  int finest() const { return static_cast<int>(matrices_.size()) - 1; }
  std::size_t size() const { return matrices_.back().rows(); }
  const SparseMatrix& level_matrix(int l) const { return matrices_.at(static_cast<std::size_t>(l)); }
  const SparseMatrix& matrix() const { return matrices_.back(); }

  /// x = one V-cycle applied to b.
  void apply(std::span<const double> b, std::span<double> x) const {
    if (b.size() != size() || x.size() != size()) throw SolverError("MultigridCycle: dimension mismatch");
    cycle(finest(), b, x);
  }

 private:
  void cycle(int l, std::span<const double> b, std::span<double> x) const {
    if (l == 0) {
      std::copy(b.begin(), b.end(), x.begin());
      coarse_.solve_in_place(x);
      return;
    }
    const auto& a = matrices_[static_cast<std::size_t>(l)];
    const auto& p = prolongations_[static_cast<std::size_t>(l)];
    std::fill(x.begin(), x.end(), 0.0);
    for (int s = 0; s < nu_pre_; ++s) gauss_seidel_sweep(a, x, b, SweepDirection::forward);

    Vector r(a.rows());
    a.apply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    Vector rc(p.cols()), ec(p.cols());
    p.apply_transpose(r, rc);
    cycle(l - 1, rc, ec);
    p.apply(ec, r);
    axpy(1.0, r, x);

    for (int s = 0; s < nu_post_; ++s) gauss_seidel_sweep(a, x, b, SweepDirection::backward);
  }

  double gamma_;
  int nu_pre_;
  int nu_post_;
  std::vector<SparseMatrix> matrices_;
  std::vector<SparseMatrix> prolongations_;
  CholeskyFactor coarse_;
};

}  // namespace chmg
