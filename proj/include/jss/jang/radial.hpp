#pragma once
// Rotationally symmetric Jang equation: barriers, expansions, blow-up solutions.
//
// Data g = phi(r)^2 dr^2 + r^2 sigma, k = k_r dr^2 + k_t r^2 sigma on S^{n-1} x (r_min, inf).
// Radial graphs u(r): with v = u'/phi and w = v/sqrt(1+v^2),
//   J(u) = (r^{n-1} w)' / (phi r^{n-1}) + k_r (1 - w^2) / phi^2 + (n-1) k_t.
// The mean curvature part is div(Du/sqrt(1+|Du|^2)), so w -> +1 gives theta+ and w -> -1 gives -theta-.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "jss/errors.hpp"
#include "jss/expr.hpp"
#include "jss/geometry/measure.hpp"

namespace jss {

struct RadialInitialData {
  std::string name;
  int n = 3;
  Expr phi2 = Expr::num(1.0);  // phi^2 as a function of r
  Expr k_r = Expr::num(0.0);
  Expr k_t = Expr::num(0.0);
  double q = 1.0;     // metric decay exponent
  double beta = 2.5;  // trace decay exponent, also the barrier exponent
  double r_min = 0.0;

  double phi_sq(double r) const { return phi2.at_r(r); }
  double phi(double r) const { return std::sqrt(phi_sq(r)); }
  double dphi(double r) const {
    if (!dphi2_) dphi2_ = phi2.derivative(Var::r);
    return dphi2_->at_r(r) / (2 * phi(r));
  }
  double d_phi_sq(double r) const {
    if (!dphi2_) dphi2_ = phi2.derivative(Var::r);
    return dphi2_->at_r(r);
  }
  // 1/phi continued through the zero of 1/phi^2 with a sign, so horizons where phi blows up are roots.
  double inverse_phi(double r) const {
    double p = phi_sq(r);
    if (std::isnan(p)) return std::nan("");
    double s = 1.0 / p;
    return s >= 0 ? std::sqrt(s) : -std::sqrt(-s);
  }
  bool in_domain(double r) const {
    if (r < r_min) return false;
    double p = phi_sq(r);
    return std::isfinite(p) && p > 0 && std::isfinite(k_r.at_r(r)) && std::isfinite(k_t.at_r(r));
  }
  double trace_k(double r) const { return k_r.at_r(r) / phi_sq(r) + (n - 1) * k_t.at_r(r); }

 private:
  mutable std::optional<Expr> dphi2_;
};

namespace radial_data {

inline RadialInitialData flat(int n = 3) {
  RadialInitialData d;
  d.name = "flat";
  d.n = n;
  return d;
}

// Schwarzschild slice: phi^2 = 1/(1 - 2m/r^{n-2}), k = 0.
inline RadialInitialData schwarzschild(double m = 1.0, int n = 3, double beta = 2.5) {
  RadialInitialData d;
  d.name = "schwarzschild";
  d.n = n;
  d.phi2 = Expr::parse("1/(1 - " + std::to_string(2 * m) + "/r^" + std::to_string(n - 2) + ")");
  d.q = n - 2;
  d.beta = beta;
  d.r_min = std::pow(2 * m, 1.0 / (n - 2));
  return d;
}

}  // namespace radial_data

// Parameter checks and sampled asymptotic decay of the data.
inline void validate(const RadialInitialData& d) {
  if (d.n < 3 || d.n > 7) throw DomainError("dimension must be in 3..7");
  if (!(d.q > (d.n - 2) / 2.0)) throw DomainError("metric decay q must exceed (n-2)/2");
  if (!(d.beta > 2.0 && d.beta < d.n)) throw DomainError("beta must lie in (2, n)");
  // |phi^2 - 1| + r|(phi^2)'| and |tr k| should fall at least like r^{-q} and r^{-beta}.
  double r0 = std::max({10.0, 10 * d.r_min});
  double m0 = 0.0, t0 = 0.0;
  for (int i = 0; i <= 40; ++i) {
    double r = r0 * std::pow(1e4, i / 40.0);
    if (!d.in_domain(r)) throw DomainError("data undefined at r=" + std::to_string(r));
    double m = (std::abs(d.phi_sq(r) - 1) + r * std::abs(d.d_phi_sq(r))) * std::pow(r, d.q);
    double t = std::abs(d.trace_k(r)) * (d.n == 3 ? std::pow(r, d.beta) : 1.0);
    if (i == 0) {
      m0 = m;
      t0 = t;
    } else {
      if (m > 10 * m0 + 1e-12) throw DomainError("metric does not decay like r^-q");
      if (t > 10 * t0 + 1e-12) throw DomainError("tr k does not decay like r^-beta");
    }
  }
}

// ---------------------------------------------------------------------------------------------
// Barrier b_Lambda(r) = Lambda * int_{r/Lambda}^inf ds / sqrt(s^{2(beta-1)} - 1).

inline void check_barrier_params(double Lambda, double beta) {
  if (!(Lambda >= 1.0) || !std::isfinite(Lambda)) throw DomainError("Lambda must be >= 1");
  if (!(beta > 2.0) || !std::isfinite(beta)) throw DomainError("beta must exceed 2");
}

// b_1(x), split at s = S = max(x, 2). On [x, S] the substitution s = cosh(y)^{1/a} gives the smooth
// integrand cosh(y)^{1/a - 1} / a. On [S, inf) the binomial series of (1 - s^{-2a})^{-1/2} is
// integrated term by term; its ratio is at most S^{-2a} <= 1/4.
inline double barrier_b1(double beta, double x) {
  const double a = beta - 1;
  if (std::isinf(x)) return 0.0;
  const double S = std::max(x, 2.0);
  double head = 0.0;
  if (x < S) {
    auto f = [&](double y) { return std::pow(std::cosh(y), 1.0 / a - 1.0) / a; };
    // The shared wrapper's 1e-13 relative target is below what the estimator resolves on short intervals.
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double err = 0.0;
    head = GK::integrate(f, std::acosh(std::pow(x, a)), std::acosh(std::pow(S, a)), 10, 1e-12, &err);
    if (!(err <= tol::quad)) throw QuadratureFailure("barrier quadrature error " + std::to_string(err));
  }
  const double z = std::pow(S, -2 * a);
  double c = 1.0, zk = std::pow(S, 1 - a), tail = 0.0;
  for (int k = 0; k < 200; ++k) {
    double term = c * zk / (a - 1 + 2 * a * k);
    tail += term;
    if (term < 1e-18 * tail) break;
    c *= (2.0 * k + 1) / (2.0 * k + 2);
    zk *= z;
  }
  return head + tail;
}

inline double barrier_b_lambda(double Lambda, double beta, double r, int n = 0) {
  check_barrier_params(Lambda, beta);
  if (n > 0 && !(beta < n)) throw DomainError("beta must be below n");
  if (!(r >= Lambda)) throw DomainError("barrier defined for r >= Lambda");
  return Lambda * barrier_b1(beta, r / Lambda);
}

inline double barrier_derivative(double Lambda, double beta, double r) {
  check_barrier_params(Lambda, beta);
  if (!(r > Lambda)) throw DomainError("barrier derivative needs r > Lambda");
  return -1.0 / std::sqrt(std::pow(r / Lambda, 2 * (beta - 1)) - 1.0);
}

inline double barrier_second_derivative(double Lambda, double beta, double r) {
  check_barrier_params(Lambda, beta);
  if (!(r > Lambda)) throw DomainError("barrier derivative needs r > Lambda");
  const double a = beta - 1, s = r / Lambda, e = std::pow(s, 2 * a) - 1.0;
  return a * std::pow(s, 2 * a - 1) / (Lambda * e * std::sqrt(e));
}

// c with b_1(x) <= c x^{2-beta} for x >= 1 and b_1(1) >= 1/c.
inline double barrier_bound_constant(double beta) {
  double c = 1.0 / (beta - 2);  // limit of b_1(x) x^{beta-2}
  for (int i = 0; i <= 120; ++i) {
    double x = std::pow(10.0, 6.0 * i / 120);
    c = std::max(c, barrier_b1(beta, x) * std::pow(x, beta - 2));
  }
  return std::max(c, 1.0 / barrier_b1(beta, 1.0));
}

struct BarrierFunction {
  double Lambda = 1.0, beta = 2.5;
  double operator()(double r) const { return barrier_b_lambda(Lambda, beta, r); }
  double derivative(double r) const { return barrier_derivative(Lambda, beta, r); }
  double bound(double r) const { return barrier_bound_constant(beta) * Lambda * std::pow(r / Lambda, 2 - beta); }
};

// ---------------------------------------------------------------------------------------------

struct Expansions {
  double plus = 0.0, minus = 0.0;
};

inline Expansions expansion_scalars(const RadialInitialData& d, double r) {
  double H = (d.n - 1) * d.inverse_phi(r) / r;
  double trk = (d.n - 1) * d.k_t.at_r(r);
  return {H + trk, H - trk};
}

struct HorizonSearch {
  double r_lo = 1e-3, r_hi = 1e4;
  int samples = 4000;
  double tol = 1e-10;
};

namespace detail {

// Largest r where f changes sign from <= 0 (inside) to > 0 (outside).
// The scan starts at r_min when the data has an inner end; roots outside the data are never reported.
inline std::optional<double> outermost_root(const std::function<double(double)>& f, HorizonSearch s, double r_min) {
  if (r_min > s.r_lo) s.r_lo = r_min;
  auto grid = [&](int i) { return i == 0 ? s.r_lo : s.r_lo * std::pow(s.r_hi / s.r_lo, double(i) / s.samples); };
  double fb = f(grid(s.samples));
  for (int i = s.samples - 1; i >= 0; --i) {
    double ra = grid(i), fa = f(ra);
    if (std::isnan(fa)) return std::nullopt;
    if (fa <= 0 && fb > 0) {
      double a = ra, b = grid(i + 1);
      if (fa == 0) return a;
      while (b - a > s.tol * std::max(1.0, a)) {
        double m = 0.5 * (a + b), fm = f(m);
        if (std::isnan(fm)) break;
        (fm <= 0 ? a : b) = m;
      }
      return 0.5 * (a + b);
    }
    fb = fa;
  }
  return std::nullopt;
}

}  // namespace detail

inline std::optional<double> outermost_mots_radius(const RadialInitialData& d, const HorizonSearch& s = {}) {
  return detail::outermost_root([&](double r) { return expansion_scalars(d, r).plus; }, s, d.r_min);
}

inline std::optional<double> outermost_mits_radius(const RadialInitialData& d, const HorizonSearch& s = {}) {
  return detail::outermost_root([&](double r) { return expansion_scalars(d, r).minus; }, s, d.r_min);
}

// ---------------------------------------------------------------------------------------------

struct RadialFunction {
  std::function<double(double)> u, du, d2u;
  static RadialFunction constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  }
  static RadialFunction barrier(double Lambda, double beta, double sign = 1.0) {
    return {[=](double r) { return sign * barrier_b_lambda(Lambda, beta, r); },
            [=](double r) { return sign * barrier_derivative(Lambda, beta, r); },
            [=](double r) { return sign * barrier_second_derivative(Lambda, beta, r); }};
  }
};

inline double jang_operator_radial(const RadialInitialData& d, const RadialFunction& f, double r) {
  const int n = d.n;
  double phi = d.phi(r), dphi = d.dphi(r);
  double up = f.du(r), upp = f.d2u(r);
  double v = up / phi, dv = upp / phi - up * dphi / (phi * phi);
  double W2 = 1 + v * v, W = std::sqrt(W2);
  double w = v / W, dw = dv / (W2 * W);
  double div = ((n - 1) * w / r + dw) / phi;
  return div + d.k_r.at_r(r) / (phi * phi * W2) + (n - 1) * d.k_t.at_r(r);
}

// Sign margins of b_Lambda as a barrier: max of J(b) (should be < 0) and max of -J(-b) (should be < 0).
struct BarrierCheck {
  double Lambda = 0.0;
  double worst_super = 0.0;  // max_r J(b_Lambda)
  double worst_sub = 0.0;    // max_r -J(-b_Lambda)
  int samples = 0;
  // Strict, with room for rounding in the operator evaluation.
  bool holds() const { return worst_super < -1e-12 && worst_sub < -1e-12; }
};

inline BarrierCheck check_barrier_signs(const RadialInitialData& d, double Lambda, int samples = 400,
                                        double span = 100.0) {
  const double inf = std::numeric_limits<double>::infinity();
  if (!d.in_domain(Lambda)) return {Lambda, inf, inf, samples};
  // Exact limits at r = Lambda, where w = -+1: the k_r term drops and (r^{n-1} w)' is driven by b''.
  double phi = d.phi(Lambda), a = d.beta - 1, trk = (d.n - 1) * d.k_t.at_r(Lambda);
  double div = (a * phi * phi - (d.n - 1)) / (phi * Lambda);
  BarrierCheck c{Lambda, div + trk, div - trk, samples};
  auto plus = RadialFunction::barrier(Lambda, d.beta, 1.0), minus = RadialFunction::barrier(Lambda, d.beta, -1.0);
  for (int i = 0; i < samples; ++i) {
    double r = Lambda * (1 + 1e-6) * std::pow(span / (1 + 1e-6), double(i) / (samples - 1));
    if (!d.in_domain(r)) return {Lambda, inf, inf, samples};
    c.worst_super = std::max(c.worst_super, jang_operator_radial(d, plus, r));
    c.worst_sub = std::max(c.worst_sub, -jang_operator_radial(d, minus, r));
  }
  return c;
}

// Doubling search for the first Lambda (a power of two) whose barrier signs hold on [Lambda, 100 Lambda].
inline BarrierCheck find_lambda0(const RadialInitialData& d, int max_doublings = 30) {
  check_barrier_params(1.0, d.beta);
  for (int j = 0; j <= max_doublings; ++j) {
    auto c = check_barrier_signs(d, std::ldexp(1.0, j));
    if (c.holds()) return c;
  }
  throw DomainError("no Lambda0 found up to 2^" + std::to_string(max_doublings));
}

// ---------------------------------------------------------------------------------------------
// Regularized problem J(u) = t u on [r_h + delta, R_max].

enum class BlowupSign { plus, minus };

struct BlowupOptions {
  double r_max = 1000.0;
  double delta_rel = 1e-6;      // inner end r_h (1 + delta_rel)
  int cells = 1200;             // geometric grid, clustered at r_h
  double C = 0.0;               // inner Dirichlet value is -+C/t; 0 picks 1 + sup of the k terms
  double threshold = 0.5;       // |u_t| >= threshold / sqrt(t) counts as diverged
  double Lambda = 0.0;          // barrier for the outer clamp and the sandwich check; 0 runs the search
  int max_newton = 200;
  double tau = 1e-10;           // relative residual target
  int max_bisections = 12;      // extra continuation steps inserted on a failed solve
};

struct RadialSolution {
  double t = 0.0;
  std::vector<double> r, u, du;        // nodes
  std::vector<double> mid, flux_w;     // cell midpoints and w = v/sqrt(1+v^2)
  double blowup_radius = 0.0;
  double barrier_excess = 0.0;         // max over r > Lambda of |u| - b_Lambda
  double residual = 0.0;
  int newton_iterations = 0;
};

struct BlowupResult {
  BlowupSign sign = BlowupSign::minus;
  std::optional<double> horizon;  // r_h, empty for data without horizon
  double C = 0.0, Lambda = 0.0;
  int n = 3;
  std::vector<RadialSolution> family;
  double limit_radius() const { return family.empty() ? 0.0 : family.back().blowup_radius; }
};

namespace detail {

struct RadialGrid {
  std::vector<double> r, mid, dr, vol, phi_mid, phi_node, kr, kt;
};

inline RadialGrid radial_grid(const RadialInitialData& d, double r0, double r_max, int cells, double cluster) {
  RadialGrid g;
  const int N = cells;
  g.r.resize(N + 1);
  // Geometric spacing from r0 outward, first cell of width ~cluster.
  double q = std::pow((r_max - r0) / cluster + 1, 1.0 / N);
  for (int i = 0; i <= N; ++i) g.r[i] = r0 + cluster * (std::pow(q, i) - 1);
  g.r[N] = r_max;
  for (int i = 0; i < N; ++i) {
    g.mid.push_back(0.5 * (g.r[i] + g.r[i + 1]));
    g.dr.push_back(g.r[i + 1] - g.r[i]);
    g.phi_mid.push_back(d.phi(g.mid[i]));
  }
  g.vol.assign(N + 1, 0.0);
  for (int i = 0; i <= N; ++i) {
    double a = i > 0 ? g.mid[i - 1] : g.r[0], b = i < N ? g.mid[i] : g.r[N];
    double p = d.phi(g.r[i]);
    g.phi_node.push_back(p);
    g.vol[i] = p * std::pow(g.r[i], d.n - 1) * (b - a);
    g.kr.push_back(d.k_r.at_r(g.r[i]));
    g.kt.push_back(d.k_t.at_r(g.r[i]));
  }
  for (double x : g.phi_mid)
    if (!std::isfinite(x) || x <= 0) throw DomainError("data undefined on the solve interval");
  return g;
}

}  // namespace detail

class RadialJangSolver {
 public:
  RadialJangSolver(const RadialInitialData& d, BlowupSign sign, const BlowupOptions& opt) : d_(d), opt_(opt) {
    validate(d);
    res_.sign = sign;
    res_.n = d.n;
    res_.horizon = sign == BlowupSign::minus ? outermost_mots_radius(d) : outermost_mits_radius(d);
    double r0, cluster;
    if (res_.horizon) {
      r0 = *res_.horizon * (1 + opt.delta_rel);
      cluster = *res_.horizon * opt.delta_rel;
    } else {
      if (d.r_min > 0 && !d.in_domain(d.r_min))
        throw DomainError("no outermost horizon for this sign and the data is singular at r_min");
      r0 = d.r_min;
      cluster = 1e-3 * std::max(1.0, d.r_min);
    }
    if (!(opt.r_max > 2 * std::max(r0, 1.0))) throw DomainError("r_max too small");
    g_ = detail::radial_grid(d, r0, opt.r_max, opt.cells, cluster);
    double C = opt.C;
    if (C <= 0) {
      double s = 0.0;
      for (size_t i = 0; i < g_.r.size(); ++i)
        s = std::max(s, std::abs(g_.kr[i]) / (g_.phi_node[i] * g_.phi_node[i]) + (d.n - 1) * std::abs(g_.kt[i]));
      C = 1.0 + s;
    }
    res_.C = C;
    res_.Lambda = opt.Lambda > 0 ? opt.Lambda : find_lambda0(d).Lambda;
  }

  const detail::RadialGrid& grid() const { return g_; }

  BlowupResult solve(const std::vector<double>& schedule) {
    for (size_t i = 0; i < schedule.size(); ++i)
      if (!(schedule[i] > 0) || (i > 0 && !(schedule[i] < schedule[i - 1])))
        throw DomainError("t schedule must be positive and decreasing");
    const int N = static_cast<int>(g_.r.size()) - 1;
    std::vector<double> u(N + 1, 0.0);
    double t_prev = 0.0;
    for (double t : schedule) {
      RadialSolution s = continue_to(u, t_prev, t, 0);
      res_.family.push_back(std::move(s));
      t_prev = t;
    }
    return res_;
  }

 private:
  const RadialInitialData& d_;
  BlowupOptions opt_;
  detail::RadialGrid g_;
  BlowupResult res_;

  double sgn() const { return res_.sign == BlowupSign::minus ? -1.0 : 1.0; }
  bool has_inner_dirichlet() const { return res_.horizon.has_value(); }

  // Solve at t from the warm start u; on failure retry through the geometric mean of t_prev and t.
  RadialSolution continue_to(std::vector<double>& u, double t_prev, double t, int depth) {
    std::vector<double> keep = u;
    try {
      return newton(u, t);
    } catch (const SolveFailure&) {
      if (t_prev <= 0 || depth >= opt_.max_bisections) throw;
      u = keep;
      double tm = std::sqrt(t_prev * t);
      continue_to(u, t_prev, tm, depth + 1);
      return continue_to(u, tm, t, depth + 1);
    }
  }

  double outer_bound() const { return barrier_b_lambda(res_.Lambda, d_.beta, g_.r.back()); }

  // Residual rows: node 0 (Dirichlet or zero-flux), interior balance, outer Robin row clamped by the barrier.
  void residual(const std::vector<double>& u, double t, std::vector<double>& R, std::vector<double>& scale,
                std::vector<double>* lo, std::vector<double>* di, std::vector<double>* up) const {
    const int N = static_cast<int>(u.size()) - 1, n = d_.n;
    std::vector<double> w(N), a(N), F(N);
    for (int i = 0; i < N; ++i) {
      double v = (u[i + 1] - u[i]) / (g_.phi_mid[i] * g_.dr[i]);
      double W = std::sqrt(1 + v * v);
      w[i] = std::isinf(v) ? std::copysign(1.0, v) : v / W;
      double m = std::pow(g_.mid[i], n - 1);
      F[i] = m * w[i];
      a[i] = m / (W * W * W) / (g_.phi_mid[i] * g_.dr[i]);
    }
    R.assign(N + 1, 0.0);
    scale.assign(N + 1, 0.0);
    if (lo) {
      lo->assign(N + 1, 0.0);
      di->assign(N + 1, 0.0);
      up->assign(N + 1, 0.0);
    }
    for (int j = 0; j <= N; ++j) {
      if (j == 0 && has_inner_dirichlet()) {
        R[0] = u[0] - sgn() * res_.C / t;
        scale[0] = std::abs(res_.C / t);
        if (lo) (*di)[0] = 1.0;
        continue;
      }
      if (j == N) {
        double c = g_.r[N] / ((n - 2) * g_.dr[N - 1]);
        double target = c / (1 + c) * u[N - 1], b = outer_bound();
        if (std::abs(target) <= b) {
          R[N] = (1 + c) * u[N] - c * u[N - 1];
          if (lo) {
            (*di)[N] = 1 + c;
            (*lo)[N] = -c;
          }
        } else {
          R[N] = u[N] - std::copysign(b, target);
          if (lo) (*di)[N] = 1.0;
        }
        scale[N] = (1 + c) * std::abs(u[N]) + c * std::abs(u[N - 1]);
        continue;
      }
      double Fr = F[j], Fl = j > 0 ? F[j - 1] : 0.0;
      double wl = j > 0 ? w[j - 1] : w[j];
      double wb = 0.5 * (wl + w[j]);
      double p2 = g_.phi_node[j] * g_.phi_node[j];
      double S = g_.kr[j] * (1 - wb * wb) / p2 + (n - 1) * g_.kt[j];
      R[j] = Fr - Fl - g_.vol[j] * (t * u[j] - S);
      scale[j] = std::abs(Fr) + std::abs(Fl) + g_.vol[j] * (t * std::abs(u[j]) + std::abs(S));
      if (lo) {
        // dS/dw_b = -2 k_r w_b / phi^2; w_b averages the neighbouring cells.
        double dS = -2 * g_.kr[j] * wb / p2;
        double ar = a[j], al = j > 0 ? a[j - 1] : 0.0;
        double dwr_dup = ar / std::pow(g_.mid[j], n - 1), dwl_dlo = j > 0 ? al / std::pow(g_.mid[j - 1], n - 1) : 0.0;
        (*up)[j] = ar + g_.vol[j] * dS * 0.5 * dwr_dup;
        (*di)[j] = -ar - al - g_.vol[j] * t + g_.vol[j] * dS * 0.5 * (-dwr_dup + dwl_dlo);
        if (j > 0) (*lo)[j] = al - g_.vol[j] * dS * 0.5 * dwl_dlo;
        if (j == 0) {  // zero-flux inner end: w at node 0 is the first cell's w
          (*up)[j] += g_.vol[j] * dS * 0.5 * dwr_dup;
          (*di)[j] -= g_.vol[j] * dS * 0.5 * dwr_dup;
        }
      }
    }
  }

  static std::vector<double> thomas(std::vector<double> lo, std::vector<double> di, std::vector<double> up,
                                    std::vector<double> rhs) {
    const int n = static_cast<int>(di.size());
    for (int i = 1; i < n; ++i) {
      double m = lo[i] / di[i - 1];
      di[i] -= m * up[i - 1];
      rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / di[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - up[i] * x[i + 1]) / di[i];
    return x;
  }

  static double merit(const std::vector<double>& R, const std::vector<double>& scale) {
    double s = 0.0;
    for (size_t i = 0; i < R.size(); ++i) s = std::max(s, std::abs(R[i]) / (scale[i] + 1e-300));
    return s;
  }

  RadialSolution newton(std::vector<double>& u, double t) {
    const int N = static_cast<int>(u.size()) - 1;
    if (has_inner_dirichlet()) u[0] = sgn() * res_.C / t;
    std::vector<double> R, sc, lo, di, up, Rt, sct;
    residual(u, t, R, sc, &lo, &di, &up);
    // Residual sums of terms ~|F| lose about eps*|F| per row.
    auto converged = [&](const std::vector<double>& Rv, const std::vector<double>& s) {
      for (int j = 0; j <= N; ++j)
        if (std::abs(Rv[j]) > opt_.tau * s[j] + 1e-300 && std::abs(Rv[j]) > 64 * 2.2e-16 * s[j]) return false;
      return true;
    };
    int it = 0;
    for (; it < opt_.max_newton && !converged(R, sc); ++it) {
      std::vector<double> rhs(N + 1);
      for (int j = 0; j <= N; ++j) rhs[j] = -R[j];
      auto du = thomas(lo, di, up, rhs);
      double m0 = merit(R, sc), lam = 1.0;
      std::vector<double> ut(N + 1);
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls, lam *= 0.5) {
        for (int j = 0; j <= N; ++j) ut[j] = u[j] + lam * du[j];
        residual(ut, t, Rt, sct, nullptr, nullptr, nullptr);
        double m1 = merit(Rt, sct);
        if (std::isfinite(m1) && (m1 < (1 - 1e-4 * lam) * m0 || converged(Rt, sct))) {
          accepted = true;
          break;
        }
      }
      if (!accepted) throw SolveFailure("radial Newton line search failed at t=" + std::to_string(t), m0);
      u = ut;
      residual(u, t, R, sc, &lo, &di, &up);
    }
    if (!converged(R, sc)) throw SolveFailure("radial Newton budget exhausted at t=" + std::to_string(t), merit(R, sc));
    return package(u, t, merit(R, sc), it);
  }

  RadialSolution package(const std::vector<double>& u, double t, double res, int it) const {
    RadialSolution s;
    const int N = static_cast<int>(u.size()) - 1;
    s.t = t;
    s.r = g_.r;
    s.u = u;
    s.mid = g_.mid;
    s.residual = res;
    s.newton_iterations = it;
    std::vector<double> slope(N);
    for (int i = 0; i < N; ++i) {
      slope[i] = (u[i + 1] - u[i]) / g_.dr[i];
      double v = slope[i] / g_.phi_mid[i];
      s.flux_w.push_back(std::isinf(v) ? std::copysign(1.0, v) : v / std::sqrt(1 + v * v));
    }
    s.du.resize(N + 1);
    s.du[0] = slope[0];
    s.du[N] = slope[N - 1];
    for (int i = 1; i < N; ++i)  // derivative of the parabola through three nodes
      s.du[i] = (slope[i - 1] * g_.dr[i] + slope[i] * g_.dr[i - 1]) / (g_.dr[i - 1] + g_.dr[i]);
    double T = opt_.threshold / std::sqrt(t);
    s.blowup_radius = has_inner_dirichlet() ? g_.r[0] : 0.0;
    for (int i = N; i >= 0; --i)
      if (std::abs(u[i]) >= T) {
        s.blowup_radius = g_.r[i];
        break;
      }
    s.barrier_excess = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= N; ++i)
      if (g_.r[i] > res_.Lambda)
        s.barrier_excess = std::max(s.barrier_excess, std::abs(u[i]) - barrier_b_lambda(res_.Lambda, d_.beta, g_.r[i]));
    return s;
  }
};

inline BlowupResult solve_blowup(const RadialInitialData& d, BlowupSign sign, const std::vector<double>& schedule,
                                 const BlowupOptions& opt = {}) {
  RadialJangSolver s(d, sign, opt);
  return s.solve(schedule);
}

// Volume of the unit (n-1)-sphere.
inline double sphere_area(int n) { return 2 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0); }

}  // namespace jss
