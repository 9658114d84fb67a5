#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "jss/errors.hpp"
#include "jss/geometry/metric.hpp"

namespace jss {

enum class EdgeMarker { outer_crescent_plus, outer_crescent_minus, corner_hole, artificial };

inline const char* marker_name(EdgeMarker m) {
  switch (m) {
    case EdgeMarker::outer_crescent_plus: return "outer_crescent_plus";
    case EdgeMarker::outer_crescent_minus: return "outer_crescent_minus";
    case EdgeMarker::corner_hole: return "corner_hole";
    case EdgeMarker::artificial: return "artificial";
  }
  return "?";
}

struct TriangleMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise in the chart
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<EdgeMarker> boundary_markers;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double chart_area(int t) const {
    const auto& T = triangles[t];
    Vec2 a = vertices[T[1]] - vertices[T[0]], b = vertices[T[2]] - vertices[T[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }

  // Gradients of the three hat functions on triangle t (chart coordinates).
  std::array<Vec2, 3> hat_gradients(int t) const {
    const auto& T = triangles[t];
    const Vec2 &p0 = vertices[T[0]], &p1 = vertices[T[1]], &p2 = vertices[T[2]];
    double twoA = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    if (!(twoA > 0.0)) throw MeshQuality("triangle " + std::to_string(t) + " is degenerate or inverted");
    auto perp = [&](const Vec2& e) -> Vec2 { return Vec2(-e.y(), e.x()) / twoA; };
    return {perp(p2 - p1), perp(p0 - p2), perp(p1 - p0)};
  }

  Vec2 centroid(int t) const {
    const auto& T = triangles[t];
    return (vertices[T[0]] + vertices[T[1]] + vertices[T[2]]) / 3.0;
  }

  // Boundary edges: edges used by exactly one triangle, oriented with the mesh on the left.
  std::vector<std::array<int, 2>> compute_boundary() const {
    std::map<std::pair<int, int>, int> count;
    for (const auto& T : triangles)
      for (int k = 0; k < 3; ++k) {
        int a = T[k], b = T[(k + 1) % 3];
        count[{std::min(a, b), std::max(a, b)}]++;
      }
    std::vector<std::array<int, 2>> out;
    for (const auto& T : triangles)
      for (int k = 0; k < 3; ++k) {
        int a = T[k], b = T[(k + 1) % 3];
        int c = count[{std::min(a, b), std::max(a, b)}];
        if (c > 2) throw MeshTopology("edge shared by more than two triangles");
        if (c == 1) out.push_back({a, b});
      }
    return out;
  }

  void check() const {
    for (int t = 0; t < num_triangles(); ++t) {
      for (int k : triangles[t])
        if (k < 0 || k >= num_vertices()) throw MeshTopology("triangle references a missing vertex");
      if (!(chart_area(t) > 0.0)) throw MeshQuality("triangle " + std::to_string(t) + " has non-positive area");
    }
    compute_boundary();
  }

  // Drops unused vertices; returns the old-to-new index map (-1 for dropped).
  std::vector<int> compact() {
    std::vector<int> used(vertices.size(), 0);
    for (const auto& T : triangles)
      for (int k : T) used[k] = 1;
    std::vector<int> map(vertices.size(), -1);
    std::vector<Vec2> v;
    for (size_t i = 0; i < vertices.size(); ++i)
      if (used[i]) {
        map[i] = static_cast<int>(v.size());
        v.push_back(vertices[i]);
      }
    vertices = std::move(v);
    for (auto& T : triangles)
      for (int& k : T) k = map[k];
    return map;
  }
};

// Point location on a uniform bucket grid over triangle bounding boxes.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriangleMesh& m) : m_(&m) {
    lo_ = hi_ = m.vertices.empty() ? Vec2::Zero() : m.vertices[0];
    for (const auto& p : m.vertices) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    n_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.num_triangles()) / 2.0)));
    cell_ = ((hi_ - lo_) / n_).cwiseMax(Vec2(1e-300, 1e-300));
    buckets_.assign(static_cast<size_t>(n_) * n_, {});
    for (int t = 0; t < m.num_triangles(); ++t) {
      Vec2 a = m.vertices[m.triangles[t][0]], b = a;
      for (int k : m.triangles[t]) {
        a = a.cwiseMin(m.vertices[k]);
        b = b.cwiseMax(m.vertices[k]);
      }
      auto [i0, j0] = index(a);
      auto [i1, j1] = index(b);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) buckets_[j * n_ + i].push_back(t);
    }
  }

  // Triangle containing p and its barycentric coordinates; -1 if outside.
  int locate(const Vec2& p, std::array<double, 3>& bary, double slack = 1e-12) const {
    if (p.x() < lo_.x() - slack || p.y() < lo_.y() - slack || p.x() > hi_.x() + slack || p.y() > hi_.y() + slack)
      return -1;
    auto [i, j] = index(p);
    for (int t : buckets_[j * n_ + i]) {
      const auto& T = m_->triangles[t];
      const Vec2 &a = m_->vertices[T[0]], &b = m_->vertices[T[1]], &c = m_->vertices[T[2]];
      double d = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
      double l1 = ((p - a).x() * (c - a).y() - (p - a).y() * (c - a).x()) / d;
      double l2 = ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / d;
      double l0 = 1.0 - l1 - l2;
      if (l0 >= -slack && l1 >= -slack && l2 >= -slack) {
        bary = {l0, l1, l2};
        return t;
      }
    }
    return -1;
  }

 private:
  const TriangleMesh* m_;
  Vec2 lo_, hi_, cell_;
  int n_;
  std::vector<std::vector<int>> buckets_;

  std::pair<int, int> index(const Vec2& p) const {
    int i = std::clamp(static_cast<int>((p.x() - lo_.x()) / cell_.x()), 0, n_ - 1);
    int j = std::clamp(static_cast<int>((p.y() - lo_.y()) / cell_.y()), 0, n_ - 1);
    return {i, j};
  }
};

struct DiscreteScalarField {
  std::shared_ptr<const TriangleMesh> mesh;
  std::vector<double> values;

  DiscreteScalarField() = default;
  DiscreteScalarField(std::shared_ptr<const TriangleMesh> m, std::vector<double> v)
      : mesh(std::move(m)), values(std::move(v)) {
    if (static_cast<int>(values.size()) != mesh->num_vertices()) throw MeshTopology("field size does not match mesh");
    for (double x : values)
      if (!std::isfinite(x)) throw DomainError("non-finite nodal value");
  }

  // Chart gradient on triangle t.
  Vec2 gradient(int t) const {
    auto G = mesh->hat_gradients(t);
    const auto& T = mesh->triangles[t];
    return values[T[0]] * G[0] + values[T[1]] * G[1] + values[T[2]] * G[2];
  }
};

namespace detail {

// Bowyer-Watson triangulation of a point set.
inline std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  Vec2 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double span = std::max((hi - lo).maxCoeff(), 1e-12);
  Vec2 mid = 0.5 * (lo + hi);
  std::vector<Vec2> P = pts;
  P.push_back(mid + Vec2(-20 * span, -20 * span));
  P.push_back(mid + Vec2(20 * span, -20 * span));
  P.push_back(mid + Vec2(0, 20 * span));
  struct Tri {
    std::array<int, 3> v;
    Vec2 c;
    double r2;
    bool alive;
  };
  auto make = [&](int a, int b, int c) {
    const Vec2 &A = P[a], &B = P[b], &C = P[c];
    double d = 2 * (A.x() * (B.y() - C.y()) + B.x() * (C.y() - A.y()) + C.x() * (A.y() - B.y()));
    double a2 = A.squaredNorm(), b2 = B.squaredNorm(), c2 = C.squaredNorm();
    Vec2 cc((a2 * (B.y() - C.y()) + b2 * (C.y() - A.y()) + c2 * (A.y() - B.y())) / d,
            (a2 * (C.x() - B.x()) + b2 * (A.x() - C.x()) + c2 * (B.x() - A.x())) / d);
    double o = (B - A).x() * (C - A).y() - (B - A).y() * (C - A).x();
    std::array<int, 3> v = o > 0 ? std::array<int, 3>{a, b, c} : std::array<int, 3>{a, c, b};
    return Tri{v, cc, (A - cc).squaredNorm(), true};
  };
  std::vector<Tri> tris{make(n, n + 1, n + 2)};
  for (int i = 0; i < n; ++i) {
    const Vec2& p = P[i];
    std::map<std::pair<int, int>, int> edges;
    for (auto& t : tris) {
      if (!t.alive) continue;
      if ((p - t.c).squaredNorm() < t.r2 * (1 + 1e-12)) {
        t.alive = false;
        for (int k = 0; k < 3; ++k) {
          int a = t.v[k], b = t.v[(k + 1) % 3];
          edges[{std::min(a, b), std::max(a, b)}]++;
        }
      }
    }
    std::vector<Tri> keep;
    keep.reserve(tris.size() + 8);
    for (auto& t : tris)
      if (t.alive) keep.push_back(t);
    tris.swap(keep);
    for (const auto& [e, c] : edges)
      if (c == 1) tris.push_back(make(e.first, e.second, i));
  }
  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris)
    if (t.v[0] < n && t.v[1] < n && t.v[2] < n) out.push_back(t.v);
  return out;
}

}  // namespace detail
}  // namespace jss
