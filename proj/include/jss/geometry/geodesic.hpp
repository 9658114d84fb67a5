#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include "jss/geometry/curve.hpp"
#include "jss/geometry/measure.hpp"

namespace jss {

namespace detail {

using State4 = Eigen::Vector4d;  // position, velocity

inline State4 geodesic_rhs(const MetricField& g, const State4& s) {
  Vec2 p = s.head<2>(), v = s.tail<2>();
  if (!g.in_chart(p)) throw OffsetTooLarge("geodesic left the chart");
  Christoffel G = g.christoffel(p);
  State4 d;
  d << v, -v.dot(G[0] * v), -v.dot(G[1] * v);
  return d;
}

template <class Rhs>
State4 rk4_step(const Rhs& f, const State4& s, double h) {
  State4 k1 = f(s);
  State4 k2 = f(s + 0.5 * h * k1);
  State4 k3 = f(s + 0.5 * h * k2);
  State4 k4 = f(s + h * k3);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Fixed-step RK4 keeps the result a smooth function of (p, v), which matters
// because offsets are differentiated numerically afterwards.
inline Vec2 exp_map(const MetricField& g, const Vec2& p, const Vec2& v, int steps = 256) {
  if (g.kind() == MetricField::Kind::flat) return p + v;
  detail::State4 s;
  s << p, v;
  const double h = 1.0 / steps;
  auto f = [&](const detail::State4& x) { return detail::geodesic_rhs(g, x); };
  for (int i = 0; i < steps; ++i) s = detail::rk4_step(f, s, h);
  return s.head<2>();
}

// Distance beyond which normal geodesics from the curve may focus.
inline double focal_radius(const MetricField& g, const CurveSegment& c, double direction, int samples = 65) {
  double r = std::numeric_limits<double>::infinity();
  double kmax = 0.0;
  for (int i = 0; i < samples; ++i) {
    double t = (i + 0.5) / samples;
    double kappa = geodesic_curvature(g, c, t);
    if (kappa * direction < 0.0) r = std::min(r, 1.0 / std::abs(kappa));
    kmax = std::max(kmax, g.gauss_curvature(c.position(t)));
  }
  if (kmax > 0.0) r = std::min(r, std::numbers::pi / (2.0 * std::sqrt(kmax)));
  return r;
}

inline CurveSegment exponential_offset(const MetricField& g, const CurveSegment& c,
                                       std::function<double(double)> profile, double distance) {
  double pmax = 0.0;
  for (int i = 0; i <= 64; ++i) pmax = std::max(pmax, profile(i / 64.0));
  double rf = focal_radius(g, c, distance);
  if (std::abs(distance) * pmax >= rf)
    throw OffsetTooLarge("offset " + std::to_string(std::abs(distance) * pmax) + " exceeds focal radius " +
                         std::to_string(rf));
  bool closed = c.closed();
  auto f = [g, c, profile, distance, closed](double t) {
    if (closed) t -= std::floor(t);
    Vec2 nu = outward_normal(g, c, t);
    return exp_map(g, c.position(t), distance * profile(t) * nu);
  };
  auto out = curves::from_map(f, c.tag(), closed);
  return out.with_orientation(c.orientation());
}

// Curves of constant signed curvature, parameterized on [0,1] by rescaled arc
// length. The state is stored at every step and evaluated by a partial RK4 step.
class CurvatureArcImpl : public CurveImpl {
 public:
  // curvature > 0 turns to the left of the direction of travel.
  CurvatureArcImpl(const MetricField& g, Vec2 p, Vec2 unit_dir, double curvature, double length, int steps)
      : g_(g), c_(curvature), L_(length), n_(steps) {
    nodes_.reserve(steps + 1);
    detail::State4 s;
    s << p, unit_dir;
    nodes_.push_back(s);
    double h = L_ / n_;
    auto f = [this](const detail::State4& x) { return rhs(x); };
    for (int i = 0; i < n_; ++i) {
      s = detail::rk4_step(f, s, h);
      nodes_.push_back(s);
    }
  }

  Vec2 end() const { return nodes_.back().head<2>(); }

  void eval(double t, Vec2* p, Vec2* d1, Vec2* d2) const override {
    double u = std::clamp(t, 0.0, 1.0) * n_;
    int i = std::min(static_cast<int>(u), n_ - 1);
    double frac = u - i;
    detail::State4 s = nodes_[i];
    if (frac > 0.0) {
      auto f = [this](const detail::State4& x) { return rhs(x); };
      s = detail::rk4_step(f, s, frac * L_ / n_);
    }
    if (p) *p = s.head<2>();
    if (d1) *d1 = L_ * s.tail<2>();
    if (d2) *d2 = L_ * L_ * rhs(s).tail<2>();
  }

  detail::State4 rhs(const detail::State4& x) const {
    Vec2 p = x.head<2>(), v = x.tail<2>();
    if (!g_.in_chart(p)) throw NoArcFound("arc left the chart");
    Christoffel G = g_.christoffel(p);
    Vec2 n = left_normal(g_, p, v) * g_.norm(p, v);
    detail::State4 d;
    d << v, Vec2(-v.dot(G[0] * v), -v.dot(G[1] * v)) + c_ * g_.norm(p, v) * n;
    return d;
  }

 private:
  MetricField g_;
  double c_, L_;
  int n_;
  std::vector<detail::State4> nodes_;
};

namespace detail {

inline Vec2 frame_direction(const MetricField& g, const Vec2& p, double angle) {
  Mat2 G = g.at(p);
  Vec2 e1(1.0 / std::sqrt(G(0, 0)), 0.0);
  Vec2 e2(0.0, 1.0);
  e2 -= g.inner(p, e2, e1) * e1;
  e2 /= g.norm(p, e2);
  return std::cos(angle) * e1 + std::sin(angle) * e2;
}

inline double frame_angle(const MetricField& g, const Vec2& p, const Vec2& v) {
  Mat2 G = g.at(p);
  Vec2 e1(1.0 / std::sqrt(G(0, 0)), 0.0);
  Vec2 e2(0.0, 1.0);
  e2 -= g.inner(p, e2, e1) * e1;
  e2 /= g.norm(p, e2);
  return std::atan2(g.inner(p, v, e2), g.inner(p, v, e1));
}

}  // namespace detail

// Shoots for arcs of constant geodesic curvature H0 from p to q, one bending
// to each side (minor arcs); for H0 = 0 a single geodesic.
inline std::vector<CurveSegment> constant_curvature_arcs(const MetricField& g, const Vec2& p, const Vec2& q,
                                                         double H0, int steps = 512) {
  if ((p - q).norm() == 0.0) throw NoArcFound("coincident endpoints");
  Vec2 mid = 0.5 * (p + q);
  double chord = g.norm(mid, q - p);
  if (H0 > 0.0 && chord * H0 > 2.0 && g.kind() == MetricField::Kind::flat)
    throw NoArcFound("chord exceeds the diameter 2/H0");

  std::vector<CurveSegment> out;
  std::vector<double> sides = H0 > 0.0 ? std::vector<double>{1.0, -1.0} : std::vector<double>{1.0};
  double phi0 = detail::frame_angle(g, p, q - p);
  for (double side : sides) {
    double c = side * H0;
    // Circle geometry in the frame at p gives the initial guess.
    double half = H0 > 0.0 ? std::asin(std::min(1.0, chord * H0 / 2.0)) : 0.0;
    double alpha = phi0 - side * half;
    double L = H0 > 0.0 ? 2.0 * half / H0 : chord;
    if (g.kind() == MetricField::Kind::flat) {
      // Exact circle or line; no shooting needed.
      if (H0 == 0.0) {
        out.push_back(curves::line(p, q));
      } else {
        double R = 1.0 / H0;
        Vec2 d = (q - p) / chord;
        Vec2 left(-d.y(), d.x());
        Vec2 center = mid + side * std::sqrt(std::max(0.0, R * R - 0.25 * chord * chord)) * left;
        double a0 = std::atan2(p.y() - center.y(), p.x() - center.x());
        double a1 = std::atan2(q.y() - center.y(), q.x() - center.x());
        double sweep = a1 - a0;
        // Left-turning arcs go counter-clockwise around the center.
        if (side > 0) {
          while (sweep <= 0) sweep += 2 * std::numbers::pi;
        } else {
          while (sweep >= 0) sweep -= 2 * std::numbers::pi;
        }
        out.push_back(curves::circle_arc(center, R, a0, a0 + sweep).with_endpoints(p, q));
      }
      continue;
    }
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      auto shoot = [&](double a, double len) {
        CurvatureArcImpl arc(g, p, detail::frame_direction(g, p, a), c, len, steps);
        return arc.end();
      };
      Vec2 F = shoot(alpha, L) - q;
      if (F.norm() < 1e-13 * (1.0 + q.norm())) {
        ok = true;
        break;
      }
      double da = 1e-7, dl = 1e-7 * std::max(L, 1e-3);
      Mat2 J;
      J.col(0) = (shoot(alpha + da, L) - shoot(alpha - da, L)) / (2 * da);
      J.col(1) = (shoot(alpha, L + dl) - shoot(alpha, L - dl)) / (2 * dl);
      if (std::abs(J.determinant()) < 1e-300) break;
      Vec2 step = J.fullPivLu().solve(-F);
      double damp = 1.0;
      while (damp > 1e-4 && (L + damp * step.y()) <= 0.0) damp *= 0.5;
      alpha += damp * step.x();
      L += damp * step.y();
    }
    if (!ok) throw NoArcFound("shooting did not converge");
    auto impl = std::make_shared<CurvatureArcImpl>(g, p, detail::frame_direction(g, p, alpha), c, L, steps);
    out.push_back(CurveSegment(impl, Tag::interior, false).with_endpoints(p, q));
  }
  return out;
}

}  // namespace jss
