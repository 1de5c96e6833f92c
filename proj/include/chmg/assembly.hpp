#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chmg/errors.hpp"
#include "chmg/mesh.hpp"
#include "chmg/quadrature.hpp"
#include "chmg/sparse.hpp"

namespace chmg {

/// Coefficients of a P1 function in the nodal basis of one mesh level.
struct NodalField {
  int level = 0;
  Vector values;
};

/// Volume and barycentric gradients of one simplex.
struct ElementGeometry {
  double volume = 0.0;
  std::array<Point, 4> grad{};  // grad of lambda_i, i < d + 1
};

inline ElementGeometry element_geometry(const MeshLevel& mesh, std::size_t cell_index) {
  const auto& cell = mesh.cells[cell_index];
  const int d = mesh.dimension;
  const auto& x0 = mesh.vertices[static_cast<std::size_t>(cell[0])];
  double jac[3][3] = {};
  double scale = 0.0;
  for (int k = 0; k < d; ++k) {
    const auto& xk = mesh.vertices[static_cast<std::size_t>(cell[static_cast<std::size_t>(k) + 1])];
    for (int r = 0; r < d; ++r) {
      jac[r][k] = xk[static_cast<std::size_t>(r)] - x0[static_cast<std::size_t>(r)];
      scale = std::max(scale, std::abs(jac[r][k]));
    }
  }
  ElementGeometry g;
  double inv[3][3] = {};
  double det = 0.0;
  if (d == 2) {
    det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    inv[0][0] = jac[1][1] / det;
    inv[0][1] = -jac[0][1] / det;
    inv[1][0] = -jac[1][0] / det;
    inv[1][1] = jac[0][0] / det;
    g.volume = std::abs(det) / 2.0;
  } else {
    const auto& m = jac;
    det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
          m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    g.volume = std::abs(det) / 6.0;
  }
  if (!(std::abs(det) > 1e-13 * std::pow(scale, d)) || !std::isfinite(det)) {
    throw AssemblyError("degenerate cell " + std::to_string(cell_index) + " on level " +
                        std::to_string(mesh.level));
  }
  // lambda_k = row (k-1) of J^-1 applied to (x - x0), k = 1..d.
  Point g0{0.0, 0.0, 0.0};
  for (int k = 0; k < d; ++k) {
    Point gk{0.0, 0.0, 0.0};
    for (int r = 0; r < d; ++r) gk[static_cast<std::size_t>(r)] = inv[k][r];
    for (int r = 0; r < 3; ++r) g0[static_cast<std::size_t>(r)] -= gk[static_cast<std::size_t>(r)];
    g.grad[static_cast<std::size_t>(k) + 1] = gk;
  }
  g.grad[0] = g0;
  return g;
}

namespace detail {

inline void check_field(const MeshLevel& mesh, std::span<const double> values, const char* who) {
  if (values.size() != mesh.num_vertices()) {
    throw AssemblyError(std::string(who) + ": field has " + std::to_string(values.size()) +
                        " coefficients, mesh level " + std::to_string(mesh.level) + " has " +
                        std::to_string(mesh.num_vertices()) + " vertices");
  }
}

inline void check_field(const MeshLevel& mesh, const NodalField& f, const char* who) {
  if (f.level != mesh.level) {
    throw AssemblyError(std::string(who) + ": field lives on level " + std::to_string(f.level) +
                        ", mesh is level " + std::to_string(mesh.level));
  }
  check_field(mesh, f.values, who);
}

template <class ElementMatrix>
SparseMatrix assemble_matrix(const MeshLevel& mesh, ElementMatrix&& element) {
  const int nv = mesh.vertices_per_cell();
  TripletList t(mesh.num_vertices(), mesh.num_vertices());
  t.reserve(mesh.num_cells() * static_cast<std::size_t>(nv * nv));
  double local[4][4];
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = element_geometry(mesh, c);
    element(c, g, local);
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < nv; ++i) {
      for (int j = 0; j < nv; ++j) t.add(cell[static_cast<std::size_t>(i)], cell[static_cast<std::size_t>(j)], local[i][j]);
    }
  }
  return t.build();
}

}  // namespace detail

/// K(k, l) = (grad phi_k, grad phi_l).
inline SparseMatrix assemble_stiffness(const MeshLevel& mesh) {
  const int nv = mesh.vertices_per_cell();
  return detail::assemble_matrix(mesh, [nv](std::size_t, const ElementGeometry& g, double (&k)[4][4]) {
    for (int i = 0; i < nv; ++i) {
      for (int j = 0; j < nv; ++j) {
        const auto& gi = g.grad[static_cast<std::size_t>(i)];
        const auto& gj = g.grad[static_cast<std::size_t>(j)];
        k[i][j] = g.volume * (gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2]);
      }
    }
  });
}

/// M(k, l) = (phi_k, phi_l).
inline SparseMatrix assemble_mass(const MeshLevel& mesh) {
  const int nv = mesh.vertices_per_cell();
  const double denom = static_cast<double>((nv) * (nv + 1));
  return detail::assemble_matrix(mesh, [nv, denom](std::size_t, const ElementGeometry& g, double (&m)[4][4]) {
    for (int i = 0; i < nv; ++i) {
      for (int j = 0; j < nv; ++j) m[i][j] = g.volume * (i == j ? 2.0 : 1.0) / denom;
    }
  });
}

/// c(k) = (phi_k, 1).
inline Vector assemble_mean_vector(const MeshLevel& mesh) {
  Vector c(mesh.num_vertices(), 0.0);
  const int nv = mesh.vertices_per_cell();
  for (std::size_t i = 0; i < mesh.num_cells(); ++i) {
    const double share = element_geometry(mesh, i).volume / nv;
    for (int k = 0; k < nv; ++k) c[static_cast<std::size_t>(mesh.cells[i][static_cast<std::size_t>(k)])] += share;
  }
  return c;
}

/// Value of a P1 field at a barycentric point of a cell.
inline double evaluate_in_cell(const MeshLevel& mesh, const Cell& cell, std::span<const double> phi,
                               const std::array<double, 4>& bary) {
  double v = 0.0;
  for (int k = 0; k < mesh.vertices_per_cell(); ++k) {
    v += bary[static_cast<std::size_t>(k)] * phi[static_cast<std::size_t>(cell[static_cast<std::size_t>(k)])];
  }
  return v;
}

/// Assembles J(phi)(k, l) = 3 (phi^2 phi_k, phi_l) into a matrix that shares
/// the pattern of the mass matrix `pattern`.
inline void assemble_weighted_mass_into(const MeshLevel& mesh, std::span<const double> phi, SparseMatrix& out) {
  detail::check_field(mesh, phi, "assemble_weighted_mass");
  const int nv = mesh.vertices_per_cell();
  const auto rule = simplex_rule(mesh.dimension);
  auto vals = out.values();
  std::fill(vals.begin(), vals.end(), 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    const double vol = cell_volume(mesh, cell);
    double local[4][4] = {};
    for (const auto& q : rule) {
      const double f = evaluate_in_cell(mesh, cell, phi, q.bary);
      const double wf = 3.0 * vol * q.weight * f * f;
      for (int i = 0; i < nv; ++i) {
        const double wi = wf * q.bary[static_cast<std::size_t>(i)];
        for (int j = 0; j < nv; ++j) local[i][j] += wi * q.bary[static_cast<std::size_t>(j)];
      }
    }
    for (int i = 0; i < nv; ++i) {
      const auto gi = static_cast<std::size_t>(cell[static_cast<std::size_t>(i)]);
      for (int j = 0; j < nv; ++j) {
        vals[out.position(gi, static_cast<std::size_t>(cell[static_cast<std::size_t>(j)]))] += local[i][j];
      }
    }
  }
}

inline SparseMatrix assemble_weighted_mass(const MeshLevel& mesh, const NodalField& phi) {
  detail::check_field(mesh, phi, "assemble_weighted_mass");
  SparseMatrix j = assemble_mass(mesh).zeros_like();
  assemble_weighted_mass_into(mesh, phi.values, j);
  return j;
}

/// N(k) = (phi^3, phi_k).
inline Vector assemble_cubic_load(const MeshLevel& mesh, std::span<const double> phi) {
  detail::check_field(mesh, phi, "assemble_cubic_load");
  const int nv = mesh.vertices_per_cell();
  const auto rule = simplex_rule(mesh.dimension);
  Vector out(mesh.num_vertices(), 0.0);
  for (const auto& cell : mesh.cells) {
    const double vol = cell_volume(mesh, cell);
    for (const auto& q : rule) {
      const double f = evaluate_in_cell(mesh, cell, phi, q.bary);
      const double w = vol * q.weight * f * f * f;
      for (int i = 0; i < nv; ++i) {
        out[static_cast<std::size_t>(cell[static_cast<std::size_t>(i)])] += w * q.bary[static_cast<std::size_t>(i)];
      }
    }
  }
  return out;
}

/// Integral of phi^p over the domain, 1 <= p <= 4 (exact for P1 phi).
inline double integrate_power(const MeshLevel& mesh, std::span<const double> phi, int p) {
  detail::check_field(mesh, phi, "integrate_power");
  const auto rule = simplex_rule(mesh.dimension);
  double total = 0.0;
  for (const auto& cell : mesh.cells) {
    const double vol = cell_volume(mesh, cell);
    double s = 0.0;
    for (const auto& q : rule) s += q.weight * std::pow(evaluate_in_cell(mesh, cell, phi, q.bary), p);
    total += vol * s;
  }
  return total;
}

/// E(phi) = int (phi^2 - 1)^2 / (4 eps) + (eps / 2) |grad phi|^2.
inline double evaluate_energy(const MeshLevel& mesh, std::span<const double> phi, double eps) {
  detail::check_field(mesh, phi, "evaluate_energy");
  if (!(eps > 0.0)) throw ConfigError("evaluate_energy: eps must be positive");
  const auto rule = simplex_rule(mesh.dimension);
  const int nv = mesh.vertices_per_cell();
  double bulk = 0.0, gradient = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    const auto g = element_geometry(mesh, c);
    double s = 0.0;
    for (const auto& q : rule) {
      const double f = evaluate_in_cell(mesh, cell, phi, q.bary);
      s += q.weight * (f * f - 1.0) * (f * f - 1.0);
    }
    bulk += g.volume * s;
    Point grad{0.0, 0.0, 0.0};
    for (int k = 0; k < nv; ++k) {
      const double v = phi[static_cast<std::size_t>(cell[static_cast<std::size_t>(k)])];
      for (int r = 0; r < 3; ++r) grad[static_cast<std::size_t>(r)] += v * g.grad[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)];
    }
    gradient += g.volume * (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]);
  }
  return bulk / (4.0 * eps) + 0.5 * eps * gradient;
}

inline NodalField interpolate_nodal(const MeshLevel& mesh, const std::function<double(const Point&)>& f) {
  NodalField out{mesh.level, Vector(mesh.num_vertices())};
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const double v = f(mesh.vertices[i]);
    if (!std::isfinite(v)) {
      throw ConfigError("interpolate_nodal: non-finite value at vertex " + std::to_string(i));
    }
    out.values[i] = v;
  }
  return out;
}

/// The per-level finite element operators the solver needs.
struct LevelOperators {
  SparseMatrix stiffness;
  SparseMatrix mass;
  Vector mean;  // c
};

inline LevelOperators build_level_operators(const MeshLevel& mesh) {
  return {assemble_stiffness(mesh), assemble_mass(mesh), assemble_mean_vector(mesh)};
}

// ---------------------------------------------------------------------------
// Mean handling. With |Omega| = 1 the mean of a nodal vector x is c^T x, and
// Pi = I - 1 c^T removes it. Pi^T = I - c 1^T maps a load vector onto the one
// that vanishes on constants.
// ---------------------------------------------------------------------------

inline void remove_mean(std::span<const double> c, std::span<double> x) {
  const double m = dot(c, x);
  for (double& v : x) v -= m;
}

/// f <- Pi^T f = f - c (1^T f).
inline void project_load(std::span<const double> c, std::span<double> f) {
  double s = 0.0;
  for (double v : f) s += v;
  axpy(-s, c, f);
}

/// Loads of the Newton system with the constant mode removed:
///   F = tau eps K mu + M (phi_j - phi_prev)
///   G = M mu - eps^-1 (N(phi_j) - M phi_prev) - eps K phi_j
/// followed by F <- Pi^T F, G <- Pi^T G. Mean shifts of mu and phi_prev
/// drop out under the projection, so full fields may be passed.
struct NonlinearResidual {
  Vector f;
  Vector g;
};

inline NonlinearResidual nonlinear_residual(const MeshLevel& mesh, const LevelOperators& ops,
                                            std::span<const double> phi_j, std::span<const double> mu_j,
                                            std::span<const double> phi_prev, double tau, double eps) {
  detail::check_field(mesh, phi_j, "nonlinear_residual");
  detail::check_field(mesh, mu_j, "nonlinear_residual");
  detail::check_field(mesh, phi_prev, "nonlinear_residual");
  const std::size_t n = mesh.num_vertices();
  NonlinearResidual r{Vector(n), Vector(n)};
  Vector diff(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = phi_j[i] - phi_prev[i];
  ops.stiffness.apply(mu_j, r.f);
  scale(tau * eps, r.f);
  ops.mass.apply(diff, tmp);
  axpy(1.0, tmp, r.f);

  const Vector cubic = assemble_cubic_load(mesh, phi_j);
  ops.mass.apply(mu_j, r.g);
  axpy(-1.0 / eps, cubic, r.g);
  ops.mass.apply(phi_prev, tmp);
  axpy(1.0 / eps, tmp, r.g);
  ops.stiffness.apply(phi_j, tmp);
  axpy(-eps, tmp, r.g);

  project_load(ops.mean, r.f);
  project_load(ops.mean, r.g);
  return r;
}

}  // namespace chmg
