#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "jss/errors.hpp"
#include "jss/expr.hpp"

namespace jss {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Gamma[k](i, j) = Christoffel symbol of the second kind.
using Christoffel = std::array<Mat2, 2>;

class MetricField {
 public:
  enum class Kind { flat, round_sphere, hyperbolic, chart };

  static MetricField flat() { return MetricField(Kind::flat, 1.0); }
  // Stereographic chart: the sphere minus one pole, equator at |x| = 1.
  static MetricField round_sphere(double radius) { return MetricField(Kind::round_sphere, check_radius(radius)); }
  // Poincare disk chart on |x| < 1.
  static MetricField hyperbolic(double radius) { return MetricField(Kind::hyperbolic, check_radius(radius)); }

  // First derivatives are optional; when absent they are taken symbolically
  // from the coefficient expressions.
  static MetricField chart(Expr g11, Expr g12, Expr g22,
                           std::optional<std::array<Expr, 6>> derivs = std::nullopt) {
    MetricField m(Kind::chart, 1.0);
    m.c_ = {g11, g12, g22};
    if (derivs) {
      m.dc_ = *derivs;
    } else {
      for (int i = 0; i < 3; ++i) {
        m.dc_[2 * i] = m.c_[i].derivative(Var::x);
        m.dc_[2 * i + 1] = m.c_[i].derivative(Var::y);
      }
    }
    return m;
  }

  Kind kind() const { return kind_; }
  double radius() const { return radius_; }
  const std::array<Expr, 3>& coefficients() const { return c_; }

  bool in_chart(const Vec2& p) const {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return false;
    if (kind_ == Kind::hyperbolic) return p.squaredNorm() < 1.0;
    if (kind_ == Kind::chart) {
      Mat2 g = at(p);
      return std::isfinite(g.sum()) && g(0, 0) > 0.0 && g.determinant() > 0.0;
    }
    return true;
  }

  Mat2 at(const Vec2& p) const {
    switch (kind_) {
      case Kind::flat: return Mat2::Identity();
      case Kind::round_sphere:
      case Kind::hyperbolic: {
        double l = conformal(p);
        return l * l * Mat2::Identity();
      }
      case Kind::chart: {
        VarValues v{p.x(), p.y(), 0.0, 0.0};
        double a = c_[0].eval(v), b = c_[1].eval(v), d = c_[2].eval(v);
        Mat2 g;
        g << a, b, b, d;
        return g;
      }
    }
    return Mat2::Identity();
  }

  // gx = dg/dx, gy = dg/dy.
  void derivatives(const Vec2& p, Mat2& gx, Mat2& gy) const {
    switch (kind_) {
      case Kind::flat:
        gx.setZero();
        gy.setZero();
        return;
      case Kind::round_sphere:
      case Kind::hyperbolic: {
        // g = l^2 I with l = 2R/(1 +- |p|^2); d(l^2) = 2 l dl.
        double s = kind_ == Kind::round_sphere ? 1.0 : -1.0;
        double q = 1.0 + s * p.squaredNorm();
        double l = 2.0 * radius_ / q;
        double dl_dq = -2.0 * radius_ / (q * q);
        double f = 2.0 * l * dl_dq * 2.0 * s;
        gx = f * p.x() * Mat2::Identity();
        gy = f * p.y() * Mat2::Identity();
        return;
      }
      case Kind::chart: {
        VarValues v{p.x(), p.y(), 0.0, 0.0};
        double d[6];
        for (int i = 0; i < 6; ++i) d[i] = dc_[i].eval(v);
        gx << d[0], d[2], d[2], d[4];
        gy << d[1], d[3], d[3], d[5];
        return;
      }
    }
  }

  double sqrt_det(const Vec2& p) const {
    if (kind_ == Kind::flat) return 1.0;
    if (kind_ != Kind::chart) {
      double l = conformal(p);
      return l * l;
    }
    double det = at(p).determinant();
    if (!(det > 0.0)) throw DomainError("metric not positive definite at (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ")");
    return std::sqrt(det);
  }

  double inner(const Vec2& p, const Vec2& a, const Vec2& b) const { return a.dot(at(p) * b); }
  double norm(const Vec2& p, const Vec2& a) const { return std::sqrt(inner(p, a, a)); }

  Christoffel christoffel(const Vec2& p) const {
    Christoffel G;
    if (kind_ == Kind::flat) {
      G[0].setZero();
      G[1].setZero();
      return G;
    }
    Mat2 g = at(p), gx = Mat2::Zero(), gy = Mat2::Zero();
    derivatives(p, gx, gy);
    Mat2 gi = g.inverse();
    const Mat2* dg[2] = {&gx, &gy};
    // Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    double low[2][2][2];
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) low[l][i][j] = 0.5 * ((*dg[i])(j, l) + (*dg[j])(i, l) - (*dg[l])(i, j));
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) G[k](i, j) = gi(k, 0) * low[0][i][j] + gi(k, 1) * low[1][i][j];
    return G;
  }

  // Covariant acceleration of a chart curve: gamma'' + Gamma(gamma', gamma').
  Vec2 acceleration(const Vec2& p, const Vec2& d1, const Vec2& d2) const {
    if (kind_ == Kind::flat) return d2;
    Christoffel G = christoffel(p);
    return d2 + Vec2(d1.dot(G[0] * d1), d1.dot(G[1] * d1));
  }

  double gauss_curvature(const Vec2& p) const {
    switch (kind_) {
      case Kind::flat: return 0.0;
      case Kind::round_sphere: return 1.0 / (radius_ * radius_);
      case Kind::hyperbolic: return -1.0 / (radius_ * radius_);
      case Kind::chart: break;
    }
    // R^m_{yxy} = d_x G^m_yy - d_y G^m_xy + G^m_xl G^l_yy - G^m_yl G^l_xy
    const double h = 1e-4;
    Christoffel G = christoffel(p);
    Christoffel Gxp = christoffel(p + Vec2(h, 0)), Gxm = christoffel(p - Vec2(h, 0));
    Christoffel Gyp = christoffel(p + Vec2(0, h)), Gym = christoffel(p - Vec2(0, h));
    double R[2];
    for (int m = 0; m < 2; ++m) {
      double dx = (Gxp[m](1, 1) - Gxm[m](1, 1)) / (2 * h);
      double dy = (Gyp[m](0, 1) - Gym[m](0, 1)) / (2 * h);
      double q = 0.0;
      for (int l = 0; l < 2; ++l) q += G[m](0, l) * G[l](1, 1) - G[m](1, l) * G[l](0, 1);
      R[m] = dx - dy + q;
    }
    Mat2 g = at(p);
    return (g(0, 0) * R[0] + g(0, 1) * R[1]) / g.determinant();
  }

 private:
  Kind kind_;
  double radius_;
  std::array<Expr, 3> c_;
  std::array<Expr, 6> dc_;  // d11/dx, d11/dy, d12/dx, d12/dy, d22/dx, d22/dy

  MetricField(Kind k, double r) : kind_(k), radius_(r) {}

  static double check_radius(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("metric radius must be positive");
    return r;
  }

  double conformal(const Vec2& p) const {
    double s = kind_ == Kind::round_sphere ? 1.0 : -1.0;
    return 2.0 * radius_ / (1.0 + s * p.squaredNorm());
  }
};

}  // namespace jss
