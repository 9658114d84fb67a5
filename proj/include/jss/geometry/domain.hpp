#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "jss/geometry/curve.hpp"
#include "jss/geometry/geodesic.hpp"
#include "jss/geometry/measure.hpp"

namespace jss {

enum class Provenance { domain_arc, interior_arc, closed_curve };

struct PolygonPiece {
  CurveSegment seg;  // traversed along the loop, outward side set
  Provenance provenance = Provenance::domain_arc;
  int index = -1;  // domain arc index or candidate index
};

// Region bounded by closed loops. Loops keep the region on their left.
struct GeneralizedPolygon {
  std::vector<std::vector<PolygonPiece>> loops;

  std::vector<PolygonPiece> boundary_chain() const {
    std::vector<PolygonPiece> out;
    for (const auto& l : loops) out.insert(out.end(), l.begin(), l.end());
    return out;
  }
};

inline double signed_area(const MetricField& g, const std::vector<PolygonPiece>& loop, const Vec2& center) {
  std::vector<CurveSegment> segs;
  for (const auto& p : loop) segs.push_back(p.seg);
  return loop_signed_area(g, segs, center);
}

inline Vec2 loop_center(const std::vector<PolygonPiece>& loop) {
  Vec2 c = Vec2::Zero();
  int n = 0;
  for (const auto& p : loop)
    for (int i = 0; i < 8; ++i, ++n) c += p.seg.position(i / 8.0);
  return c / n;
}

inline double area(const MetricField& g, const GeneralizedPolygon& region) {
  double s = 0.0;
  for (const auto& l : region.loops) s += signed_area(g, l, loop_center(l));
  return std::abs(s);
}

namespace detail {

inline int samples_for(const CurveSegment& c) {
  // Enough points for winding tests and intersection screening.
  double len = 0.0;
  Vec2 prev = c.position(0.0);
  for (int i = 1; i <= 16; ++i) {
    Vec2 p = c.position(i / 16.0);
    len += (p - prev).norm();
    prev = p;
  }
  return std::clamp(static_cast<int>(len / 2e-3), 64, 4096);
}

inline double winding(const std::vector<Vec2>& poly, const Vec2& p) {
  double w = 0.0;
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    Vec2 a = poly[i] - p, b = poly[i + 1] - p;
    w += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  }
  return w / (2 * std::numbers::pi);
}

inline double polyline_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (size_t i = 0; i + 1 < poly.size(); ++i) s += poly[i].x() * poly[i + 1].y() - poly[i].y() * poly[i + 1].x();
  return 0.5 * s;
}

inline bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace detail

struct DomainArc {
  CurveSegment curve;  // outward orientation resolved
  int from = -1, to = -1;  // corner indices, -1 for closed curves
};

class PolygonalDomain {
 public:
  // Arcs may be given in either direction; loops are assembled and oriented here.
  PolygonalDomain(MetricField metric, std::vector<Vec2> corners, std::vector<DomainArc> arcs, double H0)
      : metric_(std::move(metric)), corners_(std::move(corners)), arcs_(std::move(arcs)), H0_(H0) {
    if (!(H0_ >= 0.0)) throw InvalidDomain("H0 must be non-negative");
    if (arcs_.empty()) throw InvalidDomain("no arcs");
    for (size_t i = 0; i < arcs_.size(); ++i) {
      auto& a = arcs_[i];
      if (a.curve.tag() == Tag::interior) throw InvalidDomain("boundary arc " + std::to_string(i) + " must be plus or minus");
      if (!a.curve.closed()) {
        if (a.from < 0 || a.to < 0 || a.from >= static_cast<int>(corners_.size()) ||
            a.to >= static_cast<int>(corners_.size()))
          throw InvalidDomain("arc " + std::to_string(i) + " has invalid corner indices");
        Vec2 s = a.curve.start(), e = a.curve.end();
        if ((s - corners_[a.from]).norm() > tol::close || (e - corners_[a.to]).norm() > tol::close)
          throw InvalidDomain("arc " + std::to_string(i) + " does not start and end at its corners");
        a.curve = a.curve.with_endpoints(corners_[a.from], corners_[a.to]);
      }
    }
    assemble_loops();
    for (const auto& a : arcs_) polylines_.push_back(a.curve.sample(detail::samples_for(a.curve)));
  }

  const MetricField& metric() const { return metric_; }
  const std::vector<Vec2>& corners() const { return corners_; }
  const std::vector<DomainArc>& arcs() const { return arcs_; }
  double H0() const { return H0_; }
  const GeneralizedPolygon& as_polygon() const { return whole_; }
  // Loop membership: loops_[i] lists arc indices; entry 0 is the outer loop.
  const std::vector<std::vector<int>>& loops() const { return loop_arcs_; }

  // Chart polyline of the oriented loop.
  std::vector<Vec2> loop_polyline(int li) const {
    std::vector<Vec2> out;
    for (const auto& pc : whole_.loops[li]) {
      auto pts = pc.seg.sample(detail::samples_for(pc.seg));
      if (!out.empty()) out.pop_back();
      out.insert(out.end(), pts.begin(), pts.end());
    }
    return out;
  }

  bool contains(const Vec2& p) const {
    double w = 0.0;
    for (size_t li = 0; li < whole_.loops.size(); ++li) w += detail::winding(loop_poly_[li], p);
    return w > 0.5;
  }

  // Chart distance from p to the boundary polylines.
  double boundary_distance(const Vec2& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& poly : polylines_)
      for (size_t i = 0; i + 1 < poly.size(); ++i) {
        Vec2 a = poly[i], b = poly[i + 1];
        double len2 = (b - a).squaredNorm();
        double s = len2 > 0 ? std::clamp((p - a).dot(b - a) / len2, 0.0, 1.0) : 0.0;
        d = std::min(d, (a + s * (b - a) - p).norm());
      }
    return d;
  }

  const std::vector<std::vector<Vec2>>& arc_polylines() const { return polylines_; }

  double diameter() const {
    double d = 0.0;
    for (const auto& pa : polylines_)
      for (const auto& pb : polylines_)
        for (size_t i = 0; i < pa.size(); i += std::max<size_t>(1, pa.size() / 32))
          for (size_t j = 0; j < pb.size(); j += std::max<size_t>(1, pb.size() / 32)) {
            Vec2 m = 0.5 * (pa[i] + pb[j]);
            d = std::max(d, metric_.norm(m, pa[i] - pb[j]));
          }
    return d;
  }

  // Checks the curvature, corner and disjointness hypotheses.
  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    for (size_t i = 0; i < arcs_.size(); ++i) {
      const auto& c = arcs_[i].curve;
      double want = c.tag() == Tag::plus ? H0_ : -H0_;
      for (int s = 1; s < 16; ++s) {
        double k = geodesic_curvature(metric_, c, s / 16.0);
        if (std::abs(k - want) > tol::curv) {
          problems.push_back("arc " + std::to_string(i) + " has curvature " + std::to_string(k) + ", expected " +
                             std::to_string(want));
          break;
        }
      }
    }
    for (size_t i = 0; i < arcs_.size(); ++i)
      for (size_t j = i + 1; j < arcs_.size(); ++j) {
        const auto &a = arcs_[i], &b = arcs_[j];
        if (a.curve.closed() || b.curve.closed() || a.curve.tag() != b.curve.tag()) continue;
        if (a.from == b.from || a.from == b.to || a.to == b.from || a.to == b.to)
          problems.push_back("arcs " + std::to_string(i) + " and " + std::to_string(j) + " share a corner and a tag");
      }
    for (size_t i = 0; i < polylines_.size(); ++i)
      for (size_t j = i; j < polylines_.size(); ++j)
        if (polylines_intersect(i, j)) problems.push_back("arcs " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
    return problems;
  }

  double boundary_length(Tag tag) const {
    double s = 0.0;
    for (const auto& a : arcs_)
      if (a.curve.tag() == tag) s += arc_length(metric_, a.curve);
    return s;
  }

  double total_area() const { return area(metric_, whole_); }

 private:
  MetricField metric_;
  std::vector<Vec2> corners_;
  std::vector<DomainArc> arcs_;
  double H0_;
  GeneralizedPolygon whole_;
  std::vector<std::vector<int>> loop_arcs_;
  std::vector<std::vector<Vec2>> loop_poly_;
  std::vector<std::vector<Vec2>> polylines_;

  bool polylines_intersect(size_t i, size_t j) const {
    const auto &A = polylines_[i], &B = polylines_[j];
    for (size_t a = 0; a + 1 < A.size(); ++a)
      for (size_t b = (i == j ? a + 2 : 0); b + 1 < B.size(); ++b) {
        if (i == j && arcs_[i].curve.closed() && a == 0 && b + 2 == B.size()) continue;
        if (detail::segments_cross(A[a], A[a + 1], B[b], B[b + 1])) return true;
      }
    return false;
  }

  void assemble_loops() {
    const int n = static_cast<int>(arcs_.size());
    std::vector<bool> used(n, false);
    std::map<int, std::vector<int>> at_corner;
    for (int i = 0; i < n; ++i)
      if (!arcs_[i].curve.closed()) {
        at_corner[arcs_[i].from].push_back(i);
        at_corner[arcs_[i].to].push_back(i);
      }
    for (auto& [c, list] : at_corner)
      if (list.size() != 2) throw InvalidDomain("corner " + std::to_string(c) + " meets " + std::to_string(list.size()) + " arcs");

    // (arc, traversed forward) per loop
    std::vector<std::vector<std::pair<int, bool>>> raw;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      if (arcs_[i].curve.closed()) {
        raw.push_back({{i, true}});
        continue;
      }
      std::vector<std::pair<int, bool>> loop{{i, true}};
      int start = arcs_[i].from, cur = arcs_[i].to;
      while (cur != start) {
        const auto& list = at_corner[cur];
        int next = used[list[0]] ? list[1] : list[0];
        if (used[next]) throw InvalidDomain("boundary does not close at corner " + std::to_string(cur));
        used[next] = true;
        bool fwd = arcs_[next].from == cur;
        loop.push_back({next, fwd});
        cur = fwd ? arcs_[next].to : arcs_[next].from;
      }
      raw.push_back(loop);
    }

    auto poly_of = [&](const std::vector<std::pair<int, bool>>& loop) {
      std::vector<Vec2> out;
      for (auto [ai, fwd] : loop) {
        auto c = fwd ? arcs_[ai].curve : arcs_[ai].curve.reversed();
        auto pts = c.sample(detail::samples_for(c));
        if (!out.empty()) out.pop_back();
        out.insert(out.end(), pts.begin(), pts.end());
      }
      return out;
    };
    std::vector<double> areas;
    for (const auto& l : raw) areas.push_back(detail::polyline_area(poly_of(l)));
    size_t outer = 0;
    for (size_t i = 1; i < raw.size(); ++i)
      if (std::abs(areas[i]) > std::abs(areas[outer])) outer = i;
    std::vector<size_t> order{outer};
    for (size_t i = 0; i < raw.size(); ++i)
      if (i != outer) order.push_back(i);

    for (size_t oi : order) {
      auto loop = raw[oi];
      bool want_ccw = oi == outer;
      if ((areas[oi] > 0) != want_ccw) {
        std::reverse(loop.begin(), loop.end());
        for (auto& e : loop) e.second = !e.second;
      }
      std::vector<PolygonPiece> pieces;
      std::vector<int> ids;
      for (auto [ai, fwd] : loop) {
        // Region on the left of travel, so outward is the right normal.
        arcs_[ai].curve = arcs_[ai].curve.with_orientation(fwd ? -1 : 1);
        auto seg = fwd ? arcs_[ai].curve : arcs_[ai].curve.reversed();
        pieces.push_back({seg, arcs_[ai].curve.closed() ? Provenance::closed_curve : Provenance::domain_arc, ai});
        ids.push_back(ai);
      }
      whole_.loops.push_back(pieces);
      loop_arcs_.push_back(ids);
    }
    for (size_t li = 0; li < whole_.loops.size(); ++li) loop_poly_.push_back(loop_polyline(static_cast<int>(li)));
  }
};

}  // namespace jss
