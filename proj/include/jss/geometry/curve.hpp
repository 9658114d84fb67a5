#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include "jss/expr.hpp"
#include "jss/geometry/metric.hpp"

namespace jss {

enum class Tag { plus, minus, interior };

inline const char* tag_name(Tag t) {
  switch (t) {
    case Tag::plus: return "plus";
    case Tag::minus: return "minus";
    case Tag::interior: return "interior";
  }
  return "?";
}

// Evaluates position and the first two parameter derivatives at t in [0,1].
struct CurveImpl {
  virtual ~CurveImpl() = default;
  virtual void eval(double t, Vec2* p, Vec2* d1, Vec2* d2) const = 0;
};

class CurveSegment {
 public:
  CurveSegment() = default;
  CurveSegment(std::shared_ptr<const CurveImpl> impl, Tag tag, bool closed)
      : impl_(std::move(impl)), tag_(tag), closed_(closed) {
    Vec2 a, b;
    impl_->eval(0.0, &a, nullptr, nullptr);
    impl_->eval(1.0, &b, nullptr, nullptr);
    p0_ = a;
    p1_ = closed ? a : b;
  }

  // Snaps the declared endpoints; parameterization is forced to hit them exactly.
  CurveSegment with_endpoints(const Vec2& a, const Vec2& b) const {
    CurveSegment c = *this;
    c.p0_ = a;
    c.p1_ = closed_ ? a : b;
    return c;
  }

  Vec2 position(double t) const {
    if (t == 0.0) return reversed_ ? p1_ : p0_;
    if (t == 1.0) return reversed_ ? p0_ : p1_;
    Vec2 p;
    impl_->eval(map(t), &p, nullptr, nullptr);
    return p;
  }
  Vec2 d1(double t) const {
    Vec2 p, v;
    impl_->eval(map(t), &p, &v, nullptr);
    return reversed_ ? Vec2(-v) : v;
  }
  void eval(double t, Vec2& p, Vec2& v, Vec2& a) const {
    impl_->eval(map(t), &p, &v, &a);
    if (reversed_) v = -v;
    if (t == 0.0) p = start();
    if (t == 1.0) p = end();
  }

  Vec2 start() const { return reversed_ ? p1_ : p0_; }
  Vec2 end() const { return reversed_ ? p0_ : p1_; }
  Tag tag() const { return tag_; }
  bool closed() const { return closed_; }
  // +1: the outward normal is the left normal of the traversal direction.
  int orientation() const { return orient_; }
  bool is_reversed() const { return reversed_; }
  bool valid() const { return static_cast<bool>(impl_); }

  CurveSegment with_tag(Tag t) const {
    CurveSegment c = *this;
    c.tag_ = t;
    return c;
  }
  CurveSegment with_orientation(int o) const {
    CurveSegment c = *this;
    c.orient_ = o >= 0 ? 1 : -1;
    return c;
  }
  // Same point set traversed backwards; the outward side is kept.
  CurveSegment reversed() const {
    CurveSegment c = *this;
    c.reversed_ = !reversed_;
    c.orient_ = -orient_;
    return c;
  }

  std::vector<Vec2> sample(int n) const {
    std::vector<Vec2> out;
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) out.push_back(position(static_cast<double>(i) / n));
    return out;
  }

 private:
  std::shared_ptr<const CurveImpl> impl_;
  Vec2 p0_ = Vec2::Zero(), p1_ = Vec2::Zero();
  Tag tag_ = Tag::interior;
  bool closed_ = false;
  bool reversed_ = false;
  int orient_ = 1;

  double map(double t) const { return reversed_ ? 1.0 - t : t; }
};

namespace curves {

struct LineImpl : CurveImpl {
  Vec2 a, b;
  LineImpl(Vec2 a_, Vec2 b_) : a(a_), b(b_) {}
  void eval(double t, Vec2* p, Vec2* d1, Vec2* d2) const override {
    if (p) *p = a + t * (b - a);
    if (d1) *d1 = b - a;
    if (d2) d2->setZero();
  }
};

struct CircleImpl : CurveImpl {
  Vec2 c;
  double R, th0, th1;
  CircleImpl(Vec2 c_, double R_, double a0, double a1) : c(c_), R(R_), th0(a0), th1(a1) {}
  void eval(double t, Vec2* p, Vec2* d1, Vec2* d2) const override {
    double w = th1 - th0, th = th0 + t * w;
    double cs = std::cos(th), sn = std::sin(th);
    if (p) *p = c + R * Vec2(cs, sn);
    if (d1) *d1 = R * w * Vec2(-sn, cs);
    if (d2) *d2 = -R * w * w * Vec2(cs, sn);
  }
};

struct ExprImpl : CurveImpl {
  Expr x, y, dx, dy, ddx, ddy;
  ExprImpl(Expr x_, Expr y_) : x(x_), y(y_) {
    dx = x.derivative(Var::t);
    dy = y.derivative(Var::t);
    ddx = dx.derivative(Var::t);
    ddy = dy.derivative(Var::t);
  }
  void eval(double t, Vec2* p, Vec2* d1, Vec2* d2) const override {
    VarValues v{0.0, 0.0, t, 0.0};
    if (p) *p = Vec2(x.eval(v), y.eval(v));
    if (d1) *d1 = Vec2(dx.eval(v), dy.eval(v));
    if (d2) *d2 = Vec2(ddx.eval(v), ddy.eval(v));
  }
};

// Position from a smooth map; derivatives by fourth-order central differences.
struct MapImpl : CurveImpl {
  std::function<Vec2(double)> f;
  bool periodic;
  explicit MapImpl(std::function<Vec2(double)> f_, bool periodic_ = false) : f(std::move(f_)), periodic(periodic_) {}
  void eval(double t, Vec2* p, Vec2* d1, Vec2* d2) const override {
    if (p) *p = f(t);
    if (!d1 && !d2) return;
    const double h = 1e-3;
    // Shift the stencil inside [0,1] for open curves.
    double c = t;
    if (!periodic) c = std::clamp(t, 2 * h, 1.0 - 2 * h);
    Vec2 fm2 = f(c - 2 * h), fm1 = f(c - h), f0 = f(c), fp1 = f(c + h), fp2 = f(c + 2 * h);
    Vec2 D1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12 * h);
    Vec2 D2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12 * h * h);
    if (c != t) {
      Vec2 D3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2 * h * h * h);
      double s = t - c;
      D1 += s * D2 + 0.5 * s * s * D3;
      D2 += s * D3;
    }
    if (d1) *d1 = D1;
    if (d2) *d2 = D2;
  }
};

inline CurveSegment line(const Vec2& a, const Vec2& b, Tag tag = Tag::interior) {
  return CurveSegment(std::make_shared<LineImpl>(a, b), tag, false);
}

inline CurveSegment circle_arc(const Vec2& c, double R, double th0, double th1, Tag tag = Tag::interior) {
  bool closed = std::abs(std::abs(th1 - th0) - 2 * std::numbers::pi) < 1e-14;
  return CurveSegment(std::make_shared<CircleImpl>(c, R, th0, th1), tag, closed);
}

inline CurveSegment from_exprs(const Expr& x, const Expr& y, Tag tag, bool closed) {
  return CurveSegment(std::make_shared<ExprImpl>(x, y), tag, closed);
}

inline CurveSegment from_map(std::function<Vec2(double)> f, Tag tag, bool closed) {
  return CurveSegment(std::make_shared<MapImpl>(std::move(f), closed), tag, closed);
}

}  // namespace curves
}  // namespace jss
