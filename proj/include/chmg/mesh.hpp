#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chmg/errors.hpp"

namespace chmg {

using Point = std::array<double, 3>;
using Cell = std::array<int, 4>;

/// Conforming simplicial mesh of the unit square (d = 2) or unit cube (d = 3).
///
/// Coordinates always carry three components; the third is zero in 2D. Only
/// the first d + 1 entries of each cell are meaningful. Triangles are stored
/// counter-clockwise. Tetrahedra are stored in path order (x0 -> x3 along the
/// Kuhn edge path), which is the ordering the red refinement rule relies on;
/// their orientation is recovered from the sign of the determinant.
struct MeshLevel {
  int dimension = 2;
  int level = 0;
  std::vector<Point> vertices;
  std::vector<Cell> cells;
  std::vector<int> boundary_vertices;  // sorted

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_cells() const { return cells.size(); }
  int vertices_per_cell() const { return dimension + 1; }
};

/// Provenance of a fine vertex: either a persisting coarse vertex
/// (second == -1) or the midpoint of the coarse edge (first, second).
struct VertexParent {
  int first = -1;
  int second = -1;

  bool is_midpoint() const { return second >= 0; }
};

using ParentMap = std::vector<VertexParent>;

struct RefinedMesh {
  MeshLevel mesh;
  ParentMap parents;
};

/// Nested uniform meshes, coarse to fine. parents[l] maps the vertices of
/// levels[l] onto levels[l - 1]; parents[0] is empty.
struct MeshHierarchy {
  std::vector<MeshLevel> levels;
  std::vector<ParentMap> parents;

  int dimension() const { return levels.front().dimension; }
  int finest() const { return static_cast<int>(levels.size()) - 1; }
  const MeshLevel& operator[](int l) const { return levels.at(static_cast<std::size_t>(l)); }
};

namespace detail {

inline std::vector<int> find_boundary_vertices(const std::vector<Point>& vertices, int dim) {
  std::vector<int> out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (int k = 0; k < dim; ++k) {
      const double x = vertices[i][static_cast<std::size_t>(k)];
      if (x == 0.0 || x == 1.0) {
        out.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return out;
}

inline Point midpoint(const Point& a, const Point& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace detail

/// Signed measure of a cell (area in 2D, volume in 3D).
inline double signed_volume(const MeshLevel& mesh, const Cell& cell) {
  const auto& x0 = mesh.vertices[static_cast<std::size_t>(cell[0])];
  const auto& x1 = mesh.vertices[static_cast<std::size_t>(cell[1])];
  const auto& x2 = mesh.vertices[static_cast<std::size_t>(cell[2])];
  if (mesh.dimension == 2) {
    return 0.5 * ((x1[0] - x0[0]) * (x2[1] - x0[1]) - (x2[0] - x0[0]) * (x1[1] - x0[1]));
  }
  const auto& x3 = mesh.vertices[static_cast<std::size_t>(cell[3])];
  const double a[3] = {x1[0] - x0[0], x1[1] - x0[1], x1[2] - x0[2]};
  const double b[3] = {x2[0] - x0[0], x2[1] - x0[1], x2[2] - x0[2]};
  const double c[3] = {x3[0] - x0[0], x3[1] - x0[1], x3[2] - x0[2]};
  const double det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                     a[2] * (b[0] * c[1] - b[1] * c[0]);
  return det / 6.0;
}

inline double cell_volume(const MeshLevel& mesh, const Cell& cell) {
  return std::abs(signed_volume(mesh, cell));
}

/// Initial triangulation: the unit square cut by its two diagonals, or the
/// unit cube split into the six Kuhn tetrahedra sharing the main diagonal.
inline MeshLevel build_initial_mesh(int dimension) {
  MeshLevel mesh;
  mesh.dimension = dimension;
  mesh.level = 0;
  if (dimension == 2) {
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.5, 0.5, 0}};
    mesh.cells = {{0, 1, 4, -1}, {1, 2, 4, -1}, {2, 3, 4, -1}, {3, 0, 4, -1}};
  } else if (dimension == 3) {
    for (int i = 0; i < 8; ++i) {
      mesh.vertices.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
    }
    std::array<int, 3> axes{0, 1, 2};
    do {
      int v = 0;
      Cell cell{};
      cell[0] = v;
      for (int k = 0; k < 3; ++k) {
        v += 1 << axes[static_cast<std::size_t>(k)];
        cell[static_cast<std::size_t>(k) + 1] = v;
      }
      mesh.cells.push_back(cell);
    } while (std::next_permutation(axes.begin(), axes.end()));
  } else {
    throw ConfigError("build_initial_mesh: unsupported dimension " + std::to_string(dimension));
  }
  mesh.boundary_vertices = detail::find_boundary_vertices(mesh.vertices, dimension);
  return mesh;
}

/// One level of uniform red refinement.
///
/// Coarse vertices keep their indices; edge midpoints are appended in
/// lexicographic order of the (min, max) coarse edge. Tetrahedra use Bey's
/// rule with the interior octahedron cut along x02-x13, which maps Kuhn
/// tetrahedra onto Kuhn tetrahedra of half the size.
inline RefinedMesh refine_uniform(const MeshLevel& coarse) {
  const int dim = coarse.dimension;
  const int nv = coarse.vertices_per_cell();
  const auto n_coarse = static_cast<int>(coarse.num_vertices());

  std::vector<std::pair<int, int>> edges;
  edges.reserve(coarse.num_cells() * static_cast<std::size_t>(nv * (nv - 1) / 2));
  for (const auto& cell : coarse.cells) {
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        int a = cell[static_cast<std::size_t>(i)];
        int b = cell[static_cast<std::size_t>(j)];
        if (a > b) std::swap(a, b);
        edges.emplace_back(a, b);
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  RefinedMesh out;
  MeshLevel& fine = out.mesh;
  fine.dimension = dim;
  fine.level = coarse.level + 1;
  fine.vertices = coarse.vertices;
  fine.vertices.reserve(coarse.num_vertices() + edges.size());
  out.parents.resize(coarse.num_vertices() + edges.size());
  for (int i = 0; i < n_coarse; ++i) out.parents[static_cast<std::size_t>(i)] = {i, -1};

  std::unordered_map<std::uint64_t, int> midpoint_index;
  midpoint_index.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    const auto idx = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(detail::midpoint(coarse.vertices[static_cast<std::size_t>(a)],
                                             coarse.vertices[static_cast<std::size_t>(b)]));
    out.parents[static_cast<std::size_t>(idx)] = {a, b};
    midpoint_index.emplace(detail::edge_key(a, b), idx);
  }
  auto mid = [&](int a, int b) { return midpoint_index.at(detail::edge_key(a, b)); };

  fine.cells.reserve(coarse.num_cells() * (dim == 2 ? 4u : 8u));
  for (const auto& c : coarse.cells) {
    if (dim == 2) {
      const int m01 = mid(c[0], c[1]);
      const int m12 = mid(c[1], c[2]);
      const int m02 = mid(c[0], c[2]);
      fine.cells.push_back({c[0], m01, m02, -1});
      fine.cells.push_back({m01, c[1], m12, -1});
      fine.cells.push_back({m02, m12, c[2], -1});
      fine.cells.push_back({m01, m12, m02, -1});
    } else {
      const int x0 = c[0], x1 = c[1], x2 = c[2], x3 = c[3];
      const int x01 = mid(x0, x1), x02 = mid(x0, x2), x03 = mid(x0, x3);
      const int x12 = mid(x1, x2), x13 = mid(x1, x3), x23 = mid(x2, x3);
      fine.cells.push_back({x0, x01, x02, x03});
      fine.cells.push_back({x01, x1, x12, x13});
      fine.cells.push_back({x02, x12, x2, x23});
      fine.cells.push_back({x03, x13, x23, x3});
      fine.cells.push_back({x01, x02, x03, x13});
      fine.cells.push_back({x01, x02, x12, x13});
      fine.cells.push_back({x02, x03, x13, x23});
      fine.cells.push_back({x02, x12, x13, x23});
    }
  }
  fine.boundary_vertices = detail::find_boundary_vertices(fine.vertices, dim);
  return out;
}

/// Initial mesh plus `refinements` uniform refinements.
inline MeshHierarchy build_hierarchy(int dimension, int refinements) {
  if (refinements < 0) throw ConfigError("build_hierarchy: negative refinement count");
  MeshHierarchy h;
  h.levels.push_back(build_initial_mesh(dimension));
  h.parents.emplace_back();
  for (int l = 0; l < refinements; ++l) {
    auto refined = refine_uniform(h.levels.back());
    h.levels.push_back(std::move(refined.mesh));
    h.parents.push_back(std::move(refined.parents));
  }
  return h;
}

/// Longest edge over all cells.
inline double max_cell_diameter(const MeshLevel& mesh) {
  double hmax = 0.0;
  const int nv = mesh.vertices_per_cell();
  for (const auto& cell : mesh.cells) {
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        const auto& a = mesh.vertices[static_cast<std::size_t>(cell[static_cast<std::size_t>(i)])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(cell[static_cast<std::size_t>(j)])];
        const double d = std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
        hmax = std::max(hmax, d);
      }
    }
  }
  return hmax;
}

/// Nominal mesh size used to label sweep results: sqrt(d) times the finest
/// lattice spacing, i.e. the diagonal of the smallest lattice square/cube.
/// Gives sqrt(2)/2^(k+1) for the 2D levels and sqrt(3)/2^k in 3D.
inline double mesh_size(const MeshLevel& mesh) {
  double spacing = 1.0;
  const int nv = mesh.vertices_per_cell();
  for (const auto& cell : mesh.cells) {
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        const auto& a = mesh.vertices[static_cast<std::size_t>(cell[static_cast<std::size_t>(i)])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(cell[static_cast<std::size_t>(j)])];
        double extent = 0.0;
        for (int k = 0; k < mesh.dimension; ++k) {
          extent = std::max(extent, std::abs(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]));
        }
        spacing = std::min(spacing, extent);
      }
    }
  }
  return std::sqrt(static_cast<double>(mesh.dimension)) * spacing;
}

/// Unique edges as sorted (min, max) pairs.
inline std::vector<std::pair<int, int>> mesh_edges(const MeshLevel& mesh) {
  std::vector<std::pair<int, int>> edges;
  const int nv = mesh.vertices_per_cell();
  for (const auto& cell : mesh.cells) {
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        int a = cell[static_cast<std::size_t>(i)];
        int b = cell[static_cast<std::size_t>(j)];
        if (a > b) std::swap(a, b);
        edges.emplace_back(a, b);
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

/// Legacy VTK ASCII unstructured grid. Writes POINTS, CELLS and CELL_TYPES;
/// point scalars are appended by the caller via write_vtk_point_scalars.
inline void write_vtk_mesh(std::ostream& os, const MeshLevel& mesh, const std::string& title) {
  const int nv = mesh.vertices_per_cell();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  const auto old_prec = os.precision(17);
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices) os << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  os << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * static_cast<std::size_t>(nv + 1) << '\n';
  for (const auto& c : mesh.cells) {
    os << nv;
    for (int i = 0; i < nv; ++i) os << ' ' << c[static_cast<std::size_t>(i)];
    os << '\n';
  }
  os << "CELL_TYPES " << mesh.num_cells() << '\n';
  const int type = mesh.dimension == 2 ? 5 : 10;
  for (std::size_t i = 0; i < mesh.num_cells(); ++i) os << type << '\n';
  os.precision(old_prec);
}

}  // namespace chmg
