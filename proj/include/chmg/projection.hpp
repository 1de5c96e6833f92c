#pragma once

#include <functional>
#include <span>

#include "chmg/assembly.hpp"
#include "chmg/errors.hpp"
#include "chmg/linear_operator.hpp"
#include "chmg/minres.hpp"
#include "chmg/multigrid.hpp"

namespace chmg {

/// Solves (K + c c^T) x = b on one level of `disc` with MINRES and a
/// V-cycle for K + M as preconditioner.
inline Vector solve_augmented_stiffness(const Discretization& disc, int level, std::span<const double> b,
                                        double rtol = 1e-12) {
  const auto& ops = disc.level(level);
  const RankOneAugmented<SparseMatrix> a(ops.stiffness, ops.mean);
  const MultigridCycle pre(disc, 1.0, 4, 4, level);
  Vector x(b.size());
  const auto report = minres(a, pre, b, x, {rtol, 1000});
  if (!report.converged) {
    throw SolverError("solve_augmented_stiffness: no convergence (relative residual " +
                      std::to_string(report.relative_residual) + ")");
  }
  return x;
}

using ScalarFunction = std::function<double(const Point&)>;
using GradientFunction = std::function<Point(const Point&)>;

/// Ritz projection: a(R v, w) = a(v, w) for all w in S_h and (R v - v, 1) = 0.
/// The load a(v, phi_k) and the mean (v, 1) use the degree-4 simplex rule.
inline NodalField ritz_projection(const Discretization& disc, int level, const ScalarFunction& v,
                                  const GradientFunction& grad_v) {
  const auto& mesh = disc.mesh(level);
  const auto& ops = disc.level(level);
  const int nv = mesh.vertices_per_cell();
  const auto rule = simplex_rule(mesh.dimension);
  Vector b(mesh.num_vertices(), 0.0);
  double mean = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    const auto g = element_geometry(mesh, c);
    Point avg_grad{0.0, 0.0, 0.0};
    double avg = 0.0;
    for (const auto& q : rule) {
      Point x{0.0, 0.0, 0.0};
      for (int k = 0; k < nv; ++k) {
        const auto& xk = mesh.vertices[static_cast<std::size_t>(cell[static_cast<std::size_t>(k)])];
        for (int r = 0; r < 3; ++r) x[static_cast<std::size_t>(r)] += q.bary[static_cast<std::size_t>(k)] * xk[static_cast<std::size_t>(r)];
      }
      const Point gv = grad_v(x);
      for (int r = 0; r < 3; ++r) avg_grad[static_cast<std::size_t>(r)] += q.weight * gv[static_cast<std::size_t>(r)];
      avg += q.weight * v(x);
    }
    mean += g.volume * avg;
    for (int k = 0; k < nv; ++k) {
      const auto& gk = g.grad[static_cast<std::size_t>(k)];
      b[static_cast<std::size_t>(cell[static_cast<std::size_t>(k)])] +=
          g.volume * (avg_grad[0] * gk[0] + avg_grad[1] * gk[1] + avg_grad[2] * gk[2]);
    }
  }
  axpy(mean, ops.mean, b);
  return {level, solve_augmented_stiffness(disc, level, b)};
}

}  // namespace chmg
