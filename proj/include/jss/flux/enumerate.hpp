#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "jss/geometry/domain.hpp"
#include "jss/mots/stability.hpp"

namespace jss {

struct ClosedCandidate {
  CurveSegment curve;
};

struct EnumConfig {
  int max_corners = 12;
  bool stable_only = false;
  long max_cycles = 200000;  // budget on simple cycles
  long max_polygons = 200000;
  std::vector<ClosedCandidate> closed_candidates;
  // Circles of radius 1/H0 centered on a grid, flat metric only.
  bool auto_circles = false;
  Vec2 grid_lo = Vec2::Zero(), grid_hi = Vec2::Zero();
  int grid_nx = 0, grid_ny = 0;
};

// One boundary building block: a domain arc, an interior arc between two
// corners, or a closed curve.
struct Segment {
  CurveSegment curve;  // parameter direction as constructed; orientation unset
  Provenance provenance;
  int index;  // domain arc index, or running candidate index
  int from = -1, to = -1;
  std::vector<Vec2> poly;
};

struct SegmentSet {
  std::vector<Segment> segments;
  std::vector<std::vector<bool>> crossing;
  std::vector<std::string> notes;
  int pruned_unstable = 0;
};

namespace detail {

inline bool curves_coincide(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  auto dist = [](const Vec2& p, const std::vector<Vec2>& poly) {
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
      Vec2 u = poly[i], v = poly[i + 1];
      double l2 = (v - u).squaredNorm();
      double s = l2 > 0 ? std::clamp((p - u).dot(v - u) / l2, 0.0, 1.0) : 0.0;
      d = std::min(d, (u + s * (v - u) - p).norm());
    }
    return d;
  };
  for (int k = 1; k < 8; ++k)
    if (dist(a[a.size() * k / 8], b) > 1e-6) return false;
  return true;
}

// Interiors intersect; contacts at shared endpoints are ignored.
inline bool interiors_cross(const Segment& A, const Segment& B) {
  const auto &P = A.poly, &Q = B.poly;
  auto shared = [&](const Vec2& p) {
    for (const Vec2& q : {B.poly.front(), B.poly.back()})
      if ((p - q).norm() < 1e-9) return true;
    return false;
  };
  bool a0 = !A.curve.closed() && shared(P.front()), a1 = !A.curve.closed() && shared(P.back());
  for (size_t i = 0; i + 1 < P.size(); ++i) {
    bool near_end = (i == 0 && a0) || (i + 2 == P.size() && a1);
    for (size_t j = 0; j + 1 < Q.size(); ++j) {
      bool q_end = (j == 0) || (j + 2 == Q.size());
      if (near_end && q_end && !B.curve.closed()) continue;
      if (segments_cross(P[i], P[i + 1], Q[j], Q[j + 1])) return true;
    }
  }
  if (curves_coincide(P, Q)) return true;
  return false;
}

// Dirichlet (arcs) or periodic (closed curves) test of
// int (H0^2 + K) psi^2 <= int |psi'|^2 along the segment.
inline bool segment_stable(const MetricField& g, double H0, const Segment& s, int nodes = 400) {
  double L = arc_length(g, s.curve);
  bool closed = s.curve.closed();
  SigmaMesh m = closed ? SigmaMesh::circle(L, nodes) : SigmaMesh::interval(L, nodes);
  StabilityCoefficients c(m);
  std::vector<double> v(nodes);
  for (int i = 0; i < nodes; ++i) {
    // Uniform in parameter is close enough to uniform in length for smooth arcs.
    double t = closed ? static_cast<double>(i) / nodes : static_cast<double>(i) / (nodes - 1);
    v[i] = -(H0 * H0 + g.gauss_curvature(s.curve.position(t)));
  }
  c.set_potential(v);
  double scale = 1.0 / (L * L);
  return is_stable(c, scale).stable;
}

}  // namespace detail

inline SegmentSet build_segments(const PolygonalDomain& dom, const EnumConfig& cfg) {
  SegmentSet out;
  const auto& g = dom.metric();
  for (size_t i = 0; i < dom.arcs().size(); ++i) {
    const auto& a = dom.arcs()[i];
    Segment s{a.curve.with_orientation(1), Provenance::domain_arc, static_cast<int>(i), a.from, a.to, {}};
    s.poly = s.curve.sample(detail::samples_for(s.curve));
    out.segments.push_back(s);
  }
  const size_t ndomain = out.segments.size();
  const auto& corners = dom.corners();
  int cand = 0;
  auto inside = [&](const std::vector<Vec2>& poly) {
    for (size_t k = 1; k + 1 < poly.size(); ++k) {
      if (!dom.contains(poly[k])) return false;
    }
    return true;
  };
  for (size_t i = 0; i < corners.size(); ++i)
    for (size_t j = i + 1; j < corners.size(); ++j) {
      std::vector<CurveSegment> arcs;
      try {
        arcs = constant_curvature_arcs(g, corners[i], corners[j], dom.H0());
      } catch (const NoArcFound&) {
        continue;
      }
      for (const auto& c : arcs) {
        Segment s{c.with_tag(Tag::interior), Provenance::interior_arc, cand, static_cast<int>(i), static_cast<int>(j), {}};
        s.poly = c.sample(detail::samples_for(c));
        bool dup = false;
        for (const auto& o : out.segments)
          if (detail::curves_coincide(s.poly, o.poly) && detail::curves_coincide(o.poly, s.poly)) dup = true;
        // Keep arcs whose interior lies in the open domain.
        std::vector<Vec2> probe(s.poly.begin() + s.poly.size() / 16, s.poly.end() - s.poly.size() / 16);
        if (dup || !inside(probe)) continue;
        bool touches = false;
        for (size_t k = s.poly.size() / 16; k + s.poly.size() / 16 < s.poly.size(); ++k)
          if (dom.boundary_distance(s.poly[k]) < 1e-9) touches = true;
        if (touches) continue;
        out.segments.push_back(s);
        ++cand;
      }
    }
  std::vector<CurveSegment> closed;
  for (const auto& c : cfg.closed_candidates) closed.push_back(c.curve);
  if (cfg.auto_circles) {
    if (g.kind() != MetricField::Kind::flat || !(dom.H0() > 0.0))
      out.notes.push_back("automatic circle candidates need a flat metric and H0 > 0; skipped");
    else
      for (int a = 0; a < cfg.grid_nx; ++a)
        for (int b = 0; b < cfg.grid_ny; ++b) {
          double fx = cfg.grid_nx > 1 ? static_cast<double>(a) / (cfg.grid_nx - 1) : 0.5;
          double fy = cfg.grid_ny > 1 ? static_cast<double>(b) / (cfg.grid_ny - 1) : 0.5;
          Vec2 c(cfg.grid_lo.x() + fx * (cfg.grid_hi.x() - cfg.grid_lo.x()),
                 cfg.grid_lo.y() + fy * (cfg.grid_hi.y() - cfg.grid_lo.y()));
          closed.push_back(curves::circle_arc(c, 1.0 / dom.H0(), 0.0, 2 * std::numbers::pi));
        }
  }
  if (closed.empty()) out.notes.push_back("no closed candidate curves listed; closed-curve search skipped");
  for (const auto& c : closed) {
    Segment s{c.with_tag(Tag::interior), Provenance::closed_curve, cand, -1, -1, {}};
    s.poly = c.sample(detail::samples_for(c));
    bool ok = inside(s.poly);
    for (const auto& p : s.poly)
      if (dom.boundary_distance(p) < 1e-9) ok = false;
    if (!ok) continue;
    out.segments.push_back(s);
    ++cand;
  }
  if (cfg.stable_only) {
    std::vector<Segment> kept(out.segments.begin(), out.segments.begin() + ndomain);
    for (size_t i = ndomain; i < out.segments.size(); ++i) {
      if (detail::segment_stable(g, dom.H0(), out.segments[i])) kept.push_back(out.segments[i]);
      else ++out.pruned_unstable;
    }
    out.segments = kept;
  }
  const size_t n = out.segments.size();
  out.crossing.assign(n, std::vector<bool>(n, false));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      out.crossing[i][j] = out.crossing[j][i] = detail::interiors_cross(out.segments[i], out.segments[j]);
  return out;
}

namespace detail {

struct JordanCurve {
  std::vector<std::pair<int, bool>> pieces;  // segment, traversed forward
  std::vector<int> key;                      // sorted segment ids
  std::vector<Vec2> poly;                    // counter-clockwise
  double chart_area = 0.0;
  std::set<int> corners;
};

inline std::vector<JordanCurve> jordan_curves(const SegmentSet& S, long budget) {
  const auto& segs = S.segments;
  const int n = static_cast<int>(segs.size());
  std::vector<JordanCurve> out;
  std::set<std::vector<int>> seen;
  auto finish = [&](std::vector<std::pair<int, bool>> pieces) {
    JordanCurve J;
    for (auto& p : pieces) J.key.push_back(p.first);
    std::sort(J.key.begin(), J.key.end());
    if (!seen.insert(J.key).second) return;
    for (auto [s, fwd] : pieces) {
      auto pts = segs[s].poly;
      if (!fwd) std::reverse(pts.begin(), pts.end());
      if (!J.poly.empty()) J.poly.pop_back();
      J.poly.insert(J.poly.end(), pts.begin(), pts.end());
      if (segs[s].from >= 0) {
        J.corners.insert(segs[s].from);
        J.corners.insert(segs[s].to);
      }
    }
    double a = polyline_area(J.poly);
    if (a < 0) {
      std::reverse(pieces.begin(), pieces.end());
      for (auto& p : pieces) p.second = !p.second;
      std::reverse(J.poly.begin(), J.poly.end());
      a = -a;
    }
    J.pieces = pieces;
    J.chart_area = a;
    out.push_back(J);
    if (static_cast<long>(out.size()) > budget) throw EnumerationBudget("more than " + std::to_string(budget) + " cycles");
  };
  for (int i = 0; i < n; ++i)
    if (segs[i].curve.closed()) finish({{i, true}});

  // Simple cycles whose smallest segment id is the start segment.
  std::vector<int> path_segs;
  std::vector<std::pair<int, bool>> path;
  std::vector<bool> visited_corner;
  int max_corner = 0;
  for (const auto& s : segs) max_corner = std::max({max_corner, s.from, s.to});
  visited_corner.assign(max_corner + 1, false);
  long steps = 0;
  std::function<void(int, int, int)> dfs = [&](int start_seg, int start_corner, int cur) {
    if (++steps > budget * 64) throw EnumerationBudget("cycle search exceeded step budget");
    for (int s = start_seg + 1; s < n; ++s) {
      const auto& sg = segs[s];
      if (sg.curve.closed() || (sg.from != cur && sg.to != cur)) continue;
      bool clash = false;
      for (int p : path_segs)
        if (p == s || S.crossing[p][s]) clash = true;
      if (clash) continue;
      bool fwd = sg.from == cur;
      int nxt = fwd ? sg.to : sg.from;
      if (nxt == start_corner) {
        auto pieces = path;
        pieces.push_back({s, fwd});
        finish(pieces);
        continue;
      }
      if (visited_corner[nxt]) continue;
      visited_corner[nxt] = true;
      path_segs.push_back(s);
      path.push_back({s, fwd});
      dfs(start_seg, start_corner, nxt);
      path.pop_back();
      path_segs.pop_back();
      visited_corner[nxt] = false;
    }
  };
  for (int s0 = 0; s0 < n; ++s0) {
    if (segs[s0].curve.closed()) continue;
    int a = segs[s0].from, b = segs[s0].to;
    path_segs = {s0};
    path = {{s0, true}};
    visited_corner.assign(max_corner + 1, false);
    visited_corner[a] = visited_corner[b] = true;
    if (a == b) {
      finish(path);
      continue;
    }
    dfs(s0, a, b);
  }
  return out;
}

inline bool point_inside(const JordanCurve& J, const Vec2& p) { return winding(J.poly, p) > 0.5; }

// A point strictly inside the Jordan curve, found by probing off the middle
// of its first piece.
inline Vec2 interior_probe(const JordanCurve& J) {
  size_t k = J.poly.size() / 3;
  Vec2 a = J.poly[k], b = J.poly[k + 1];
  Vec2 t = (b - a).normalized();
  Vec2 left(-t.y(), t.x());
  for (double d = 1e-3; d > 1e-9; d *= 0.5) {
    Vec2 p = 0.5 * (a + b) + d * left;
    if (point_inside(J, p)) return p;
  }
  return 0.5 * (a + b);
}

inline bool inside_of(const JordanCurve& inner, const JordanCurve& outer) {
  // inner's polyline lies in the closure of outer and has smaller area.
  if (inner.chart_area >= outer.chart_area) return false;
  int in = 0, total = 0;
  for (size_t i = 0; i < inner.poly.size(); i += std::max<size_t>(1, inner.poly.size() / 64), ++total)
    if (point_inside(outer, inner.poly[i]) || [&] {
          for (const auto& q : outer.poly)
            if ((q - inner.poly[i]).norm() < 1e-9) return true;
          return false;
        }())
      ++in;
  return in == total && point_inside(outer, interior_probe(inner));
}

inline bool share_anything(const JordanCurve& a, const JordanCurve& b, const SegmentSet& S) {
  for (int x : a.key)
    for (int y : b.key)
      if (x == y || S.crossing[x][y]) return true;
  for (int c : a.corners)
    if (b.corners.count(c)) return true;
  return false;
}

}  // namespace detail

// Every connected region bounded by the available segments. Holes must be
// disjoint from the outer boundary and from each other.
inline std::vector<GeneralizedPolygon> enumerate_generalized_polygons(const PolygonalDomain& dom, const EnumConfig& cfg,
                                                                     SegmentSet* segments_out = nullptr) {
  if (static_cast<int>(dom.corners().size()) > cfg.max_corners)
    throw EnumerationBudget("domain has " + std::to_string(dom.corners().size()) + " corners, limit " +
                            std::to_string(cfg.max_corners));
  SegmentSet S = build_segments(dom, cfg);
  auto J = detail::jordan_curves(S, cfg.max_cycles);
  // Deterministic order: by number of pieces, then key.
  std::sort(J.begin(), J.end(), [](const auto& a, const auto& b) {
    if (a.key.size() != b.key.size()) return a.key.size() < b.key.size();
    return a.key < b.key;
  });

  // Domain holes: inner loops of the domain, as Jordan curves.
  std::vector<detail::JordanCurve> dom_holes;
  for (size_t li = 1; li < dom.loops().size(); ++li) {
    std::vector<int> key(dom.loops()[li].begin(), dom.loops()[li].end());
    std::sort(key.begin(), key.end());
    for (const auto& j : J)
      if (j.key == key) dom_holes.push_back(j);
  }

  const auto& segs = S.segments;
  std::vector<GeneralizedPolygon> out;
  std::set<std::vector<int>> seen;
  auto emit = [&](const detail::JordanCurve& outer, const std::vector<const detail::JordanCurve*>& holes) {
    std::vector<int> key = outer.key;
    for (auto* h : holes) key.insert(key.end(), h->key.begin(), h->key.end());
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) return;
    GeneralizedPolygon P;
    auto add_loop = [&](const detail::JordanCurve& j, bool ccw) {
      std::vector<PolygonPiece> loop;
      auto pieces = j.pieces;
      if (!ccw) {
        std::reverse(pieces.begin(), pieces.end());
        for (auto& p : pieces) p.second = !p.second;
      }
      for (auto [s, fwd] : pieces) {
        auto base = segs[s].curve.with_orientation(fwd ? -1 : 1);
        loop.push_back({fwd ? base : base.reversed(), segs[s].provenance, segs[s].index});
      }
      P.loops.push_back(loop);
    };
    add_loop(outer, true);
    for (auto* h : holes) add_loop(*h, false);
    out.push_back(P);
    if (static_cast<long>(out.size()) > cfg.max_polygons) throw EnumerationBudget("too many polygons");
  };

  for (const auto& outer : J) {
    // Holes of the domain inside this curve must be cut out.
    std::vector<const detail::JordanCurve*> inner;
    for (const auto& h : J)
      if (&h != &outer && detail::inside_of(h, outer) && !detail::share_anything(h, outer, S)) inner.push_back(&h);
    std::vector<const detail::JordanCurve*> required;
    for (const auto& dh : dom_holes)
      if (detail::inside_of(dh, outer)) required.push_back(&dh);
    // Is every required domain hole inside the chosen hole set?
    auto covers = [&](const std::vector<const detail::JordanCurve*>& chosen) {
      for (auto* r : required) {
        bool ok = false;
        for (auto* c : chosen)
          if (c->key == r->key || detail::inside_of(*r, *c)) ok = true;
        if (!ok) return false;
      }
      return true;
    };
    // The outer curve must not itself be a domain hole.
    bool is_hole = false;
    for (const auto& dh : dom_holes)
      if (dh.key == outer.key) is_hole = true;
    if (is_hole) continue;

    std::vector<const detail::JordanCurve*> chosen;
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == inner.size()) {
        if (covers(chosen)) emit(outer, chosen);
        return;
      }
      rec(i + 1);
      const auto* h = inner[i];
      for (auto* c : chosen)
        if (detail::share_anything(*c, *h, S) || detail::inside_of(*c, *h) || detail::inside_of(*h, *c)) return;
      chosen.push_back(h);
      rec(i + 1);
      chosen.pop_back();
    };
    rec(0);
  }
  if (segments_out) *segments_out = S;
  return out;
}

}  // namespace jss
