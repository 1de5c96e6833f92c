#pragma once

#include <array>
#include <span>
#include <vector>

#include "chmg/errors.hpp"

namespace chmg {

/// Quadrature point in barycentric coordinates. Weights are normalized to sum
/// to one, so an integral over a cell is |cell| * sum_q w_q f(x_q).
struct QuadraturePoint {
  std::array<double, 4> bary{};
  double weight = 0.0;
};

namespace detail {

inline std::vector<QuadraturePoint> triangle_degree4() {
  // Six-point symmetric rule (Strang-Fix / Dunavant), exact for degree 4.
  constexpr double a = 0.445948490915964886318329253883;
  constexpr double wa = 0.223381589678011465944827947809;
  constexpr double b = 0.091576213509770743459571463402;
  constexpr double wb = 0.109951743655321867355172052191;
  std::vector<QuadraturePoint> q;
  for (auto [x, w] : {std::pair{a, wa}, std::pair{b, wb}}) {
    const double y = 1.0 - 2.0 * x;
    q.push_back({{x, x, y, 0.0}, w});
    q.push_back({{x, y, x, 0.0}, w});
    q.push_back({{y, x, x, 0.0}, w});
  }
  return q;
}

inline std::vector<QuadraturePoint> tetrahedron_degree5() {
  // Fourteen-point symmetric rule with positive weights, exact for degree 5.
  constexpr double a1 = 0.310885919263300609797345733763;
  constexpr double w1 = 0.112687925718015850799185652537;
  constexpr double a2 = 0.092735250310891226402120642988;
  constexpr double w2 = 0.073493043116361949544150769592;
  constexpr double a3 = 0.045503704125649649491518169406;
  constexpr double w3 = 0.042546020777081466438069866601;
  std::vector<QuadraturePoint> q;
  for (auto [x, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double y = 1.0 - 3.0 * x;
    for (int k = 0; k < 4; ++k) {
      QuadraturePoint p{{x, x, x, x}, w};
      p.bary[static_cast<std::size_t>(k)] = y;
      q.push_back(p);
    }
  }
  const double b3 = 0.5 - a3;
  constexpr int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (const auto& pr : pairs) {
    QuadraturePoint p{{a3, a3, a3, a3}, w3};
    p.bary[static_cast<std::size_t>(pr[0])] = b3;
    p.bary[static_cast<std::size_t>(pr[1])] = b3;
    q.push_back(p);
  }
  return q;
}

}  // namespace detail

/// Symmetric simplex rule of strength at least 4 for the given dimension.
inline std::span<const QuadraturePoint> simplex_rule(int dimension) {
  static const std::vector<QuadraturePoint> tri = detail::triangle_degree4();
  static const std::vector<QuadraturePoint> tet = detail::tetrahedron_degree5();
  if (dimension == 2) return tri;
  if (dimension == 3) return tet;
  throw ConfigError("simplex_rule: unsupported dimension");
}

}  // namespace chmg
