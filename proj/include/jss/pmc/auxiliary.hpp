#pragma once
// Auxiliary domain: the closed domain minus corner disks, with a thin crescent
// glued outside every plus/minus boundary arc, meshed conformingly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "jss/geometry/domain.hpp"
#include "jss/geometry/geodesic.hpp"
#include "jss/pmc/mesh.hpp"

namespace jss {

using Profile = std::function<double(double)>;

inline Profile default_profile(bool closed) {
  if (closed) return [](double) { return 1.0; };
  return [](double s) { return std::sin(std::numbers::pi * s); };
}

struct Crescent {
  int arc = -1;
  Tag tag = Tag::plus;
  CurveSegment curve;  // the domain arc, outward orientation
  Profile profile;
  double eps = 0.0;
  int layers = 0;
  std::vector<double> theta;        // fiber parameters along the arc
  std::vector<std::vector<int>> node;  // node[i][j]: vertex of fiber i at layer j, -1 if excised
  int sign() const { return tag == Tag::plus ? 1 : -1; }
};

struct AuxiliaryDomain {
  explicit AuxiliaryDomain(PolygonalDomain d) : domain(std::move(d)) {}
  PolygonalDomain domain;
  double eps = 0.0, h = 0.0, r_corner = 0.0;
  std::shared_ptr<TriangleMesh> mesh;
  std::vector<Crescent> crescents;
  // Per vertex: crescent index (-1 in the closed domain), fiber coordinate t in
  // [0, eps] (0 on the domain), and whether the value is prescribed.
  std::vector<int> vertex_crescent;
  std::vector<double> vertex_t;
  std::vector<char> dirichlet;
  std::vector<double> H;    // prescribed mean curvature before the k-dependent shift
  std::vector<double> chi;  // cutoff in [-1, 1]
  double sup_H_deviation = 0.0;
  double curvature_scale = 1.0;
  bool structured = false;
};

// Fiber coordinates: x = exp_{c(theta)}(t * eps... ) is inverted to (theta, s)
// with s the geodesic distance along the normal fiber.
struct FiberPoint {
  double theta = 0.0, s = 0.0;
};

inline Vec2 fiber_point(const MetricField& g, const CurveSegment& c, double theta, double s) {
  Vec2 p = c.position(theta);
  Vec2 nu = outward_normal(g, c, theta);
  if (g.kind() == MetricField::Kind::flat) return p + s * nu;
  return exp_map(g, p, s * nu, 64);
}

// Jacobian of (theta, s) -> fiber point; analytic for the flat metric.
inline Mat2 fiber_jacobian(const MetricField& g, const CurveSegment& c, double theta, double s) {
  Mat2 J;
  if (g.kind() == MetricField::Kind::flat) {
    Vec2 p, v, a;
    c.eval(theta, p, v, a);
    double n = v.norm();
    Vec2 Jv(-v.y(), v.x()), Ja(-a.y(), a.x());
    Vec2 nu = c.orientation() * Jv / n;
    Vec2 dnu = c.orientation() * (Ja / n - Jv * v.dot(a) / (n * n * n));
    J.col(0) = v + s * dnu;
    J.col(1) = nu;
    return J;
  }
  const double d = 1e-7;
  J.col(0) = (fiber_point(g, c, theta + d, s) - fiber_point(g, c, theta - d, s)) / (2 * d);
  J.col(1) = (fiber_point(g, c, theta, s + d) - fiber_point(g, c, theta, s - d)) / (2 * d);
  return J;
}

inline FiberPoint invert_fiber(const MetricField& g, const CurveSegment& c, const Vec2& x, double theta0, double s0) {
  FiberPoint f{theta0, s0};
  for (int it = 0; it < 50; ++it) {
    Vec2 F = fiber_point(g, c, f.theta, f.s) - x;
    if (F.norm() < 1e-14 * (1.0 + x.norm())) return f;
    Mat2 J = fiber_jacobian(g, c, f.theta, f.s);
    if (std::abs(J.determinant()) < 1e-300) break;
    Vec2 step = J.fullPivLu().solve(-F);
    f.theta += step.x();
    f.s += step.y();
    if (!std::isfinite(f.theta) || !std::isfinite(f.s)) break;
  }
  Vec2 F = fiber_point(g, c, f.theta, f.s) - x;
  if (F.norm() < 1e-10 * (1.0 + x.norm())) return f;
  throw FiberInversionFailure("point is outside the fiber chart of the crescent");
}

// Barrier value on a crescent at fiber parameter theta and distance s:
// plus side log(t / eps), minus side -log(t / eps), with s = t * profile(theta).
inline double crescent_barrier_value(Tag tag, double eps, double t) {
  double v = std::log(t / eps);
  return tag == Tag::plus ? v : -v;
}

inline double crescent_barrier_at(const MetricField& g, const Crescent& cr, const Vec2& x, double theta0 = 0.5,
                                  double s0 = 0.0) {
  FiberPoint f = invert_fiber(g, cr.curve, x, theta0, s0);
  double th = cr.profile(f.theta);
  if (!(f.theta > 0.0 && f.theta < 1.0) && !cr.curve.closed()) throw FiberInversionFailure("fiber parameter outside the arc");
  if (!(th > 0.0) || f.s < 0.0 || f.s > cr.eps * th * (1 + 1e-12))
    throw FiberInversionFailure("point is not inside the crescent");
  return crescent_barrier_value(cr.tag, cr.eps, f.s / th);
}

// Mean curvature div(Du/W) of the crescent barrier graph at x, by central
// differences of the densitized unit normal.
inline double crescent_barrier_curvature(const MetricField& g, const Crescent& cr, const Vec2& x, double theta0,
                                         double s0) {
  auto grad = [&](const Vec2& p, double& sg) -> Vec2 {
    FiberPoint f = invert_fiber(g, cr.curve, p, theta0, s0);
    double th = cr.profile(f.theta);
    const double dt = 1e-5;
    double dth = (cr.profile(f.theta + dt) - cr.profile(f.theta - dt)) / (2 * dt);
    // u = sign * (log s - log eps - log profile(theta))
    Vec2 du_fiber(-dth / th, 1.0 / f.s);
    du_fiber *= cr.sign();
    Mat2 J = fiber_jacobian(g, cr.curve, f.theta, f.s);
    Vec2 Du = J.transpose().fullPivLu().solve(du_fiber);
    Mat2 gi = g.at(p).inverse();
    Vec2 up = gi * Du;
    double W = std::sqrt(1.0 + Du.dot(up));
    sg = g.sqrt_det(p);
    return sg * up / W;
  };
  // Fourth-order central differences at a step well inside the fiber scale.
  double delta = 0.02 * std::max(s0, 1e-6);
  double sg;
  auto dx = [&](const Vec2& e, int c) {
    return (8 * (grad(x + delta * e, sg)[c] - grad(x - delta * e, sg)[c]) - grad(x + 2 * delta * e, sg)[c] +
            grad(x - 2 * delta * e, sg)[c]) /
           (12 * delta);
  };
  double div = dx(Vec2(1, 0), 0) + dx(Vec2(0, 1), 1);
  return div / g.sqrt_det(x);
}

namespace detail {

inline bool axis_aligned_rectangle(const PolygonalDomain& dom, Vec2& lo, Vec2& hi) {
  if (dom.metric().kind() != MetricField::Kind::flat || dom.corners().size() != 4 || dom.arcs().size() != 4) return false;
  lo = hi = dom.corners()[0];
  for (const auto& c : dom.corners()) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  for (const auto& c : dom.corners()) {
    bool ok = (c.x() == lo.x() || c.x() == hi.x()) && (c.y() == lo.y() || c.y() == hi.y());
    if (!ok) return false;
  }
  for (const auto& a : dom.arcs()) {
    Vec2 m = a.curve.position(0.5), s = a.curve.start(), e = a.curve.end();
    if ((m - 0.5 * (s + e)).norm() > 1e-12) return false;
    if (s.x() != e.x() && s.y() != e.y()) return false;
  }
  return true;
}

inline double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Chart distance from p to a polyline.
inline double polyline_distance(const std::vector<Vec2>& poly, const Vec2& p) {
  double d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    Vec2 a = poly[i], b = poly[i + 1];
    double l2 = (b - a).squaredNorm();
    double s = l2 > 0 ? std::clamp((p - a).dot(b - a) / l2, 0.0, 1.0) : 0.0;
    d = std::min(d, (a + s * (b - a) - p).norm());
  }
  return d;
}

}  // namespace detail

// Offsets beyond the tubular radius of the boundary are rejected: crescents
// must be embedded, pairwise disjoint, and thinner than half the distance
// between boundary arcs that share no corner.
inline void check_crescent_width(const PolygonalDomain& dom, double eps, const std::vector<Profile>& profiles) {
  const auto& g = dom.metric();
  const auto& arcs = dom.arcs();
  for (size_t i = 0; i < arcs.size(); ++i) {
    double pmax = 0.0;
    for (int s = 0; s <= 64; ++s) pmax = std::max(pmax, profiles[i](s / 64.0));
    double rf = focal_radius(g, arcs[i].curve, 1.0);
    if (eps * pmax >= rf) throw OffsetTooLarge("crescent width exceeds the focal radius of arc " + std::to_string(i));
    for (size_t j = i + 1; j < arcs.size(); ++j) {
      bool adjacent = !arcs[i].curve.closed() && !arcs[j].curve.closed() &&
                      (arcs[i].from == arcs[j].from || arcs[i].from == arcs[j].to || arcs[i].to == arcs[j].from ||
                       arcs[i].to == arcs[j].to);
      if (adjacent) continue;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& p : dom.arc_polylines()[i]) d = std::min(d, detail::polyline_distance(dom.arc_polylines()[j], p));
      double pj = 0.0;
      for (int s = 0; s <= 64; ++s) pj = std::max(pj, profiles[j](s / 64.0));
      if (eps * (pmax + pj) >= d)
        throw OffsetTooLarge("crescents of arcs " + std::to_string(i) + " and " + std::to_string(j) + " collide");
    }
  }
}

struct AuxOptions {
  double eps = 0.05;
  double h = 0.02;
  std::vector<Profile> profiles;  // per domain arc; defaults when empty
  // Rectangles only: spacing shrinks geometrically toward the sides, down to h / grade.
  double grade = 16.0;
};

namespace detail {

// Symmetric 1D node set on [a, b]: spacing h in the middle, h / grade at both
// ends, ratio 1.25 between neighbouring cells in the graded band.
inline std::vector<double> graded_nodes(double a, double b, double h, double grade) {
  std::vector<double> band;  // cell widths from the end inward
  if (grade > 1.0)
    for (double w = h / grade; w < h; w *= 1.25) band.push_back(w);
  double wb = 0.0;
  for (double w : band) wb += w;
  if (4 * wb > b - a) {
    band.clear();
    wb = 0.0;
  }
  int n = std::max(2, static_cast<int>(std::lround((b - a - 2 * wb) / h)));
  double hm = (b - a - 2 * wb) / n;
  std::vector<double> left{0.0};
  for (double w : band) left.push_back(left.back() + w);
  std::vector<double> x;
  for (double d : left) x.push_back(a + d);
  for (int i = 1; i < n; ++i) x.push_back(a + wb + i * hm);
  for (size_t i = left.size(); i-- > 0;) x.push_back(b - left[i]);
  return x;
}

}  // namespace detail

inline AuxiliaryDomain build_auxiliary_domain(const PolygonalDomain& dom, const AuxOptions& opt) {
  const auto& g = dom.metric();
  const auto& arcs = dom.arcs();
  if (!(opt.eps > 0.0) || !(opt.h > 0.0)) throw DomainError("eps and h must be positive");
  std::vector<Profile> profiles = opt.profiles;
  if (profiles.empty())
    for (const auto& a : arcs) profiles.push_back(default_profile(a.curve.closed()));
  if (profiles.size() != arcs.size()) throw DomainError("one profile per boundary arc is required");
  check_crescent_width(dom, opt.eps, profiles);

  AuxiliaryDomain aux{dom};
  aux.eps = opt.eps;
  aux.h = opt.h;
  auto mesh = std::make_shared<TriangleMesh>();
  auto& V = mesh->vertices;
  auto& T = mesh->triangles;

  // Boundary nodes per arc, shared by the domain mesh and the crescents.
  std::vector<int> corner_vertex(dom.corners().size(), -1);
  for (size_t c = 0; c < dom.corners().size(); ++c) {
    corner_vertex[c] = static_cast<int>(V.size());
    V.push_back(dom.corners()[c]);
  }
  std::vector<std::vector<int>> arc_nodes(arcs.size());
  std::vector<std::vector<double>> arc_theta(arcs.size());

  Vec2 lo, hi;
  aux.structured = detail::axis_aligned_rectangle(dom, lo, hi);
  // Corner holes are two cells wide at the local mesh size; grading refines
  // the corners, and the hole radius is the leading error term near them.
  const double h_corner = aux.structured && opt.grade > 1.0 ? opt.h / opt.grade : opt.h;
  aux.r_corner = 2.0 * h_corner;
  int nx = 0, ny = 0;
  std::vector<std::vector<int>> grid;
  if (aux.structured) {
    auto xs = detail::graded_nodes(lo.x(), hi.x(), opt.h, opt.grade);
    auto ys = detail::graded_nodes(lo.y(), hi.y(), opt.h, opt.grade);
    nx = static_cast<int>(xs.size()) - 1;
    ny = static_cast<int>(ys.size()) - 1;
    grid.assign(nx + 1, std::vector<int>(ny + 1, -1));
    auto point = [&](int i, int j) { return Vec2(xs[i], ys[j]); };
    for (int i = 0; i <= nx; ++i)
      for (int j = 0; j <= ny; ++j) {
        Vec2 p = point(i, j);
        int id = -1;
        for (size_t c = 0; c < dom.corners().size(); ++c)
          if (dom.corners()[c] == p) id = corner_vertex[c];
        if (id < 0) {
          id = static_cast<int>(V.size());
          V.push_back(p);
        }
        grid[i][j] = id;
      }
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        // Diagonal along x = y keeps the mesh symmetric under (x, y) -> (y, x).
        int a = grid[i][j], b = grid[i + 1][j], c = grid[i + 1][j + 1], d = grid[i][j + 1];
        T.push_back({a, b, c});
        T.push_back({a, c, d});
      }
    for (size_t ai = 0; ai < arcs.size(); ++ai) {
      Vec2 s = arcs[ai].curve.start(), e = arcs[ai].curve.end();
      bool horizontal = s.y() == e.y();
      int n = horizontal ? nx : ny;
      for (int k = 0; k <= n; ++k) {
        // Walk the grid line from s to e.
        bool rev = horizontal ? e.x() < s.x() : e.y() < s.y();
        int q = rev ? n - k : k;
        int i = horizontal ? q : (s.x() == lo.x() ? 0 : nx);
        int j = horizontal ? (s.y() == lo.y() ? 0 : ny) : q;
        double th = horizontal ? (xs[i] - s.x()) / (e.x() - s.x()) : (ys[j] - s.y()) / (e.y() - s.y());
        arc_nodes[ai].push_back(grid[i][j]);
        arc_theta[ai].push_back(k == 0 ? 0.0 : k == n ? 1.0 : th);
      }
    }
  } else {
    std::vector<Vec2> pts;
    std::vector<int> ids;
    for (size_t c = 0; c < corner_vertex.size(); ++c) {
      pts.push_back(V[corner_vertex[c]]);
      ids.push_back(corner_vertex[c]);
    }
    for (size_t ai = 0; ai < arcs.size(); ++ai) {
      const auto& cv = arcs[ai].curve;
      double L = 0.0;
      auto poly = cv.sample(256);
      for (size_t k = 0; k + 1 < poly.size(); ++k) L += (poly[k + 1] - poly[k]).norm();
      int n = std::max(cv.closed() ? 8 : 2, static_cast<int>(std::ceil(L / (0.8 * opt.h))));
      int kmax = cv.closed() ? n - 1 : n;
      for (int k = 0; k <= kmax; ++k) {
        double th = static_cast<double>(k) / n;
        int id;
        if (!cv.closed() && k == 0) id = corner_vertex[arcs[ai].from];
        else if (!cv.closed() && k == n) id = corner_vertex[arcs[ai].to];
        else {
          id = static_cast<int>(V.size());
          V.push_back(cv.position(th));
          pts.push_back(V.back());
          ids.push_back(id);
        }
        arc_nodes[ai].push_back(id);
        arc_theta[ai].push_back(th);
      }
      if (cv.closed()) {
        arc_nodes[ai].push_back(arc_nodes[ai][0]);
        arc_theta[ai].push_back(1.0);
      }
    }
    // Interior points on a triangular lattice, kept away from the boundary.
    Vec2 blo = V[0], bhi = V[0];
    for (const auto& p : V) {
      blo = blo.cwiseMin(p);
      bhi = bhi.cwiseMax(p);
    }
    double dy = opt.h * std::sqrt(3.0) / 2;
    for (int j = 0; blo.y() + j * dy <= bhi.y(); ++j)
      for (int i = 0; blo.x() + i * opt.h <= bhi.x() + opt.h; ++i) {
        Vec2 p(blo.x() + i * opt.h + (j % 2 ? 0.5 * opt.h : 0.0), blo.y() + j * dy);
        if (!dom.contains(p) || dom.boundary_distance(p) < 0.7 * opt.h) continue;
        ids.push_back(static_cast<int>(V.size()));
        V.push_back(p);
        pts.push_back(p);
      }
    for (const auto& t : detail::delaunay(pts)) {
      Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
      if (dom.contains(c)) T.push_back({ids[t[0]], ids[t[1]], ids[t[2]]});
    }
    // Every boundary segment must be a mesh edge.
    std::set<std::pair<int, int>> edges;
    for (const auto& t : T)
      for (int k = 0; k < 3; ++k) edges.insert({std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])});
    for (const auto& nodes : arc_nodes)
      for (size_t k = 0; k + 1 < nodes.size(); ++k)
        if (!edges.count({std::min(nodes[k], nodes[k + 1]), std::max(nodes[k], nodes[k + 1])}))
          throw MeshQuality("boundary segment missing from the triangulation; refine h");
  }
  const int n_domain_vertices = static_cast<int>(V.size());

  // Crescents: fibers at the boundary nodes, layers in the fiber coordinate.
  const int layers = std::max(4, static_cast<int>(std::ceil(opt.eps / opt.h)));
  std::vector<int> v_cres(V.size(), -1);
  std::vector<double> v_t(V.size(), 0.0);
  std::vector<double> v_theta(V.size(), 0.0);
  for (size_t ai = 0; ai < arcs.size(); ++ai) {
    Crescent cr;
    cr.arc = static_cast<int>(ai);
    cr.tag = arcs[ai].curve.tag();
    cr.curve = arcs[ai].curve;
    cr.profile = profiles[ai];
    cr.eps = opt.eps;
    cr.layers = layers;
    cr.theta = arc_theta[ai];
    const int nf = static_cast<int>(cr.theta.size());
    const bool closed = cr.curve.closed();
    cr.node.assign(nf, std::vector<int>(layers + 1, -1));
    const int ci = static_cast<int>(aux.crescents.size());
    for (int i = 0; i < nf; ++i) {
      cr.node[i][0] = arc_nodes[ai][i];
      if (closed && i == nf - 1) {
        cr.node[i] = cr.node[0];
        continue;
      }
      double th = cr.profile(cr.theta[i]);
      for (int j = 1; j <= layers; ++j) {
        if (!(th > 0.0)) {
          cr.node[i][j] = cr.node[i][0];
          continue;
        }
        double t = opt.eps * j / layers;
        cr.node[i][j] = static_cast<int>(V.size());
        V.push_back(fiber_point(g, cr.curve, cr.theta[i], t * th));
        v_cres.push_back(ci);
        v_t.push_back(t);
        v_theta.push_back(cr.theta[i]);
      }
    }
    // Each fiber quad gets a center node, so no diagonal has to be chosen.
    for (int i = 0; i + 1 < nf; ++i)
      for (int j = 0; j < layers; ++j) {
        int a = cr.node[i][j], b = cr.node[i + 1][j], c = cr.node[i + 1][j + 1], d = cr.node[i][j + 1];
        std::vector<int> ring{a, b, c, d};
        ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
        if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
        if (ring.size() < 3) continue;
        Vec2 m = Vec2::Zero();
        for (int r : ring) m += V[r];
        m /= static_cast<double>(ring.size());
        int mid = static_cast<int>(V.size());
        V.push_back(m);
        v_cres.push_back(ci);
        v_t.push_back(opt.eps * (j + 0.5) / layers);
        v_theta.push_back(0.5 * (cr.theta[i] + cr.theta[i + 1]));
        for (size_t k = 0; k < ring.size(); ++k) {
          std::array<int, 3> tri{ring[k], ring[(k + 1) % ring.size()], mid};
          Vec2 e1 = V[tri[1]] - V[tri[0]], e2 = V[tri[2]] - V[tri[0]];
          double o = e1.x() * e2.y() - e1.y() * e2.x();
          if (o < 0) std::swap(tri[0], tri[1]);
          T.push_back(tri);
        }
      }
    aux.crescents.push_back(cr);
  }

  // Corner excision: drop triangles touching the corner disks.
  std::vector<Vec2> corners = dom.corners();
  auto near_corner = [&](const Vec2& p) {
    for (const auto& c : corners)
      if ((p - c).norm() < aux.r_corner) return true;
    return false;
  };
  std::vector<std::array<int, 3>> kept;
  for (const auto& t : T) {
    bool drop = false;
    for (int k : t) drop = drop || near_corner(V[k]);
    if (!drop) kept.push_back(t);
  }
  T.swap(kept);
  // Orientation and degeneracy checks before compaction.
  for (auto& t : T) {
    Vec2 e1 = V[t[1]] - V[t[0]], e2 = V[t[2]] - V[t[0]];
    double o = e1.x() * e2.y() - e1.y() * e2.x();
    if (o < 0) std::swap(t[1], t[2]);
    if (!(std::abs(o) > 0.0)) throw MeshQuality("degenerate triangle in auxiliary mesh");
  }
  auto map = mesh->compact();
  for (auto& cr : aux.crescents)
    for (auto& fiber : cr.node)
      for (int& v : fiber) v = v >= 0 ? map[v] : -1;
  const int nv = mesh->num_vertices();
  aux.vertex_crescent.assign(nv, -1);
  aux.vertex_t.assign(nv, 0.0);
  std::vector<double> theta(nv, 0.0);
  for (size_t old = 0; old < map.size(); ++old)
    if (map[old] >= 0 && static_cast<int>(old) >= n_domain_vertices) {
      aux.vertex_crescent[map[old]] = v_cres[old];
      aux.vertex_t[map[old]] = v_t[old];
      theta[map[old]] = v_theta[old];
    }
  mesh->check();

  // Boundary edges and markers. Outer crescent layer carries Dirichlet data.
  std::set<int> outer_nodes;
  for (const auto& cr : aux.crescents)
    for (const auto& fiber : cr.node)
      if (fiber[cr.layers] >= 0 && aux.vertex_crescent[fiber[cr.layers]] >= 0) outer_nodes.insert(fiber[cr.layers]);
  aux.dirichlet.assign(nv, 0);
  mesh->boundary_edges = mesh->compute_boundary();
  for (const auto& e : mesh->boundary_edges) {
    EdgeMarker m = EdgeMarker::artificial;
    bool outer = outer_nodes.count(e[0]) && outer_nodes.count(e[1]);
    if (outer) {
      int ci = aux.vertex_crescent[e[0]];
      m = aux.crescents[ci].tag == Tag::plus ? EdgeMarker::outer_crescent_plus : EdgeMarker::outer_crescent_minus;
      aux.dirichlet[e[0]] = aux.dirichlet[e[1]] = 1;
    } else {
      bool corner = false;
      for (const auto& c : corners)
        if ((V[e[0]] - c).norm() < aux.r_corner + 3 * h_corner || (V[e[1]] - c).norm() < aux.r_corner + 3 * h_corner)
          corner = true;
      if (corner) m = EdgeMarker::corner_hole;
    }
    mesh->boundary_markers.push_back(m);
  }

  // Prescribed curvature: H0 on the closed domain, barrier curvature on crescents.
  aux.H.assign(nv, dom.H0());
  for (int v = 0; v < nv; ++v) {
    int ci = aux.vertex_crescent[v];
    if (ci < 0) continue;
    const auto& cr = aux.crescents[ci];
    double s0 = aux.vertex_t[v] * cr.profile(theta[v]);
    if (!(s0 > 0.0)) continue;
    aux.H[v] = crescent_barrier_curvature(g, cr, V[v], theta[v], s0);
    aux.sup_H_deviation = std::max(aux.sup_H_deviation, std::abs(aux.H[v] - dom.H0()));
  }
  double kmax = 0.0;
  for (const auto& a : arcs)
    for (int s = 0; s <= 16; ++s) kmax = std::max(kmax, std::abs(g.gauss_curvature(a.curve.position(s / 16.0))));
  aux.curvature_scale = 1.0 + dom.H0() + std::sqrt(kmax);

  // Cutoff: +-1 on crescents, smoothstep to 0 across a collar of width 2 eps.
  aux.chi.assign(nv, 0.0);
  const auto& polys = dom.arc_polylines();
  for (int v = 0; v < nv; ++v) {
    int ci = aux.vertex_crescent[v];
    if (ci >= 0) {
      aux.chi[v] = aux.crescents[ci].sign();
      continue;
    }
    double s = 0.0;
    for (size_t ai = 0; ai < arcs.size(); ++ai) {
      double d = detail::polyline_distance(polys[ai], V[v]);
      if (d >= 2 * opt.eps) continue;
      s += (arcs[ai].curve.tag() == Tag::plus ? 1.0 : -1.0) * detail::smoothstep(1.0 - d / (2 * opt.eps));
    }
    aux.chi[v] = std::clamp(s, -1.0, 1.0);
  }
  aux.mesh = mesh;
  return aux;
}

}  // namespace jss
