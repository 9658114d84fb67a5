#pragma once
// Domains shared by several test files.

#include <cmath>
#include <numbers>

#include "jss/geometry/domain.hpp"
#include "jss/pmc/mesh.hpp"

namespace jss::fixtures {

using std::numbers::pi;

inline PolygonalDomain rectangle(double w, double h, bool plus_long = true, double angle = 0.0, Vec2 shift = {0, 0}) {
  auto R = [&](Vec2 p) -> Vec2 {
    return Vec2(std::cos(angle) * p.x() - std::sin(angle) * p.y(), std::sin(angle) * p.x() + std::cos(angle) * p.y()) +
           shift;
  };
  std::vector<Vec2> c{R({-w / 2, -h / 2}), R({w / 2, -h / 2}), R({w / 2, h / 2}), R({-w / 2, h / 2})};
  // Bottom and top are the plus sides when plus_long.
  Tag t0 = plus_long ? Tag::plus : Tag::minus, t1 = plus_long ? Tag::minus : Tag::plus;
  std::vector<DomainArc> arcs;
  Tag tags[] = {t0, t1, t0, t1};
  for (int i = 0; i < 4; ++i) arcs.push_back({curves::line(c[i], c[(i + 1) % 4], tags[i]), i, (i + 1) % 4});
  return PolygonalDomain(MetricField::flat(), c, arcs, 0.0);
}

inline PolygonalDomain scherk() { return rectangle(pi, pi); }

inline const Vec2 kA(0.5, -std::sqrt(3.0) / 2), kB(0.5, std::sqrt(3.0) / 2);

inline PolygonalDomain lune() {
  std::vector<Vec2> c{{0, 0}, {1, 0}};
  auto plus = curves::circle_arc(kA, 1, 2 * pi / 3, 2 * pi / 3 + 5 * pi / 3, Tag::plus).with_endpoints(c[0], c[1]);
  auto minus = curves::circle_arc(kB, 1, 4 * pi / 3, 5 * pi / 3, Tag::minus).with_endpoints(c[0], c[1]);
  return PolygonalDomain(MetricField::flat(), c, {{plus, 0, 1}, {minus, 0, 1}}, 1.0);
}

inline PolygonalDomain disk() {
  return PolygonalDomain(MetricField::flat(), {}, {{curves::circle_arc({0, 0}, 1, 0, 2 * pi, Tag::plus), -1, -1}}, 0.0);
}

// Square [a,b]^2 split into right triangles along one diagonal direction.
inline TriangleMesh grid_mesh(double a, double b, int n) {
  TriangleMesh m;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) m.vertices.emplace_back(a + (b - a) * i / n, a + (b - a) * j / n);
  auto id = [&](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

// Delaunay mesh of a disk: boundary ring plus an interior hexagonal lattice.
inline TriangleMesh disk_mesh(double R, double h) {
  std::vector<Vec2> pts;
  int nb = static_cast<int>(std::ceil(2 * pi * R / h));
  for (int k = 0; k < nb; ++k) pts.emplace_back(R * std::cos(2 * pi * k / nb), R * std::sin(2 * pi * k / nb));
  double dy = h * std::sqrt(3.0) / 2;
  for (int j = -100; j <= 100; ++j)
    for (int i = -100; i <= 100; ++i) {
      Vec2 p(i * h + (j % 2 ? 0.5 * h : 0.0), j * dy);
      if (p.norm() < R - 0.6 * h) pts.push_back(p);
    }
  TriangleMesh m;
  m.vertices = pts;
  m.triangles = detail::delaunay(pts);
  return m;
}

}  // namespace jss::fixtures
