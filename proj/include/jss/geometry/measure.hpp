#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "jss/geometry/curve.hpp"
#include "jss/geometry/metric.hpp"

namespace jss {

namespace tol {
inline constexpr double quad = 1e-10;
inline constexpr double ode = 1e-10;
inline constexpr double curv = 1e-6;
inline constexpr double area = 1e-8;
inline constexpr double close = 1e-8;
inline constexpr double embed = 1e-9;
inline constexpr double speed = 1e-9;
}  // namespace tol

// Adaptive Gauss-Kronrod (7/15) with an absolute error target.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = tol::quad, unsigned max_depth = 18) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0, l1 = 0.0;
  double v = GK::integrate(f, a, b, max_depth, 1e-13, &err, &l1);
  if (!std::isfinite(v)) throw QuadratureFailure("non-finite integrand");
  if (err > abs_tol && err > 1e-13 * l1) throw QuadratureFailure("error estimate " + std::to_string(err));
  return v;
}

// Unit normal to the left of the tangent v, in the metric at p.
inline Vec2 left_normal(const MetricField& g, const Vec2& p, const Vec2& v) {
  Vec2 w = g.at(p) * v;
  Vec2 n(-w.y(), w.x());
  return n / g.norm(p, n);
}

inline Vec2 outward_normal(const MetricField& g, const CurveSegment& c, double t) {
  Vec2 p, v, a;
  c.eval(t, p, v, a);
  return c.orientation() * left_normal(g, p, v);
}

inline double geodesic_curvature(const MetricField& g, const CurveSegment& c, double t) {
  Vec2 p, v, a;
  c.eval(t, p, v, a);
  double s2 = g.inner(p, v, v);
  if (!(std::sqrt(s2) > tol::speed)) throw DegenerateCurve("speed below tolerance at t=" + std::to_string(t));
  Vec2 nu = c.orientation() * left_normal(g, p, v);
  return -g.inner(p, nu, g.acceleration(p, v, a)) / s2;
}

inline double speed(const MetricField& g, const CurveSegment& c, double t) {
  Vec2 p, v, a;
  c.eval(t, p, v, a);
  return std::sqrt(g.inner(p, v, v));
}

inline double arc_length(const MetricField& g, const CurveSegment& c, double t0 = 0.0, double t1 = 1.0) {
  return integrate([&](double t) { return speed(g, c, t); }, t0, t1);
}

// Signed area enclosed with respect to the fan from `center`; counter-clockwise
// chains give positive values.
inline double fan_area(const MetricField& g, const CurveSegment& c, const Vec2& center) {
  if (g.kind() == MetricField::Kind::flat) {
    return integrate(
        [&](double t) {
          Vec2 p, v, a;
          c.eval(t, p, v, a);
          Vec2 r = p - center;
          return 0.5 * (r.x() * v.y() - r.y() * v.x());
        },
        0.0, 1.0, 1e-12);
  }
  return integrate(
      [&](double t) {
        Vec2 p, v, a;
        c.eval(t, p, v, a);
        Vec2 r = p - center;
        double cross = r.x() * v.y() - r.y() * v.x();
        if (cross == 0.0) return 0.0;
        double inner = integrate([&](double s) { return g.sqrt_det(center + s * r) * s; }, 0.0, 1.0, 1e-13);
        return inner * cross;
      },
      0.0, 1.0, 1e-11);
}

inline void check_closed(const std::vector<CurveSegment>& loop) {
  if (loop.empty()) throw NotClosed("empty chain");
  for (size_t i = 0; i < loop.size(); ++i) {
    const auto& a = loop[i];
    const auto& b = loop[(i + 1) % loop.size()];
    if ((a.end() - b.start()).norm() > tol::close)
      throw NotClosed("gap of " + std::to_string((a.end() - b.start()).norm()) + " after piece " + std::to_string(i));
  }
}

inline double loop_signed_area(const MetricField& g, const std::vector<CurveSegment>& loop, const Vec2& center) {
  check_closed(loop);
  double s = 0.0;
  for (const auto& c : loop) s += fan_area(g, c, center);
  return s;
}

}  // namespace jss
