#pragma once
// Uniqueness diagnostics: the convexity integrand, the decay fit and the horizon-area flux.

#include <cmath>
#include <functional>
#include <vector>

#include "jss/errors.hpp"
#include "jss/geometry/metric.hpp"
#include "jss/jang/radial.hpp"
#include "jss/pmc/mesh.hpp"

namespace jss {

// g(Du - Dv, Du/W_u - Dv/W_v) for chart differentials Du, Dv and metric matrix G.
inline double nitsche_integrand(const Mat2& G, const Vec2& Du, const Vec2& Dv) {
  Mat2 Gi = G.inverse();
  double Wu = std::sqrt(1 + Du.dot(Gi * Du)), Wv = std::sqrt(1 + Dv.dot(Gi * Dv));
  Vec2 d = Du - Dv;
  return d.dot(Gi * (Du / Wu - Dv / Wv));
}

inline double nitsche_integrand(const MetricField& g, const Vec2& p, const Vec2& Du, const Vec2& Dv) {
  return nitsche_integrand(g.at(p), Du, Dv);
}

// Same integrand from two fields on a common mesh, evaluated on the triangle containing p.
inline double nitsche_integrand(const MetricField& g, const DiscreteScalarField& u, const DiscreteScalarField& v,
                                const Vec2& p) {
  if (u.mesh != v.mesh && (u.mesh->vertices != v.mesh->vertices || u.mesh->triangles != v.mesh->triangles))
    throw MeshTopology("fields live on different meshes");
  TriangleLocator loc(*u.mesh);
  std::array<double, 3> bary;
  int t = loc.locate(p, bary);
  if (t < 0) throw DomainError("point outside the mesh");
  return nitsche_integrand(g, p, u.gradient(t), v.gradient(t));
}

struct DefectReport {
  double defect = 0.0;
  double area = 0.0;
  double max_gradient = 0.0;  // max of |Du|_g and |Dv|_g over the region
  double tau = 0.0;           // 1e-6 area (1 + max_gradient^2)
  bool certified() const { return defect <= tau; }
};

// Integral of the convexity integrand over the triangles whose centroid satisfies `region`
// (all triangles when region is empty). One-point quadrature: the gradients are constant per triangle.
inline DefectReport uniqueness_defect(const MetricField& g, const DiscreteScalarField& u, const DiscreteScalarField& v,
                                      const std::function<bool(const Vec2&)>& region = {}) {
  if (u.mesh != v.mesh && (u.mesh->vertices != v.mesh->vertices || u.mesh->triangles != v.mesh->triangles))
    throw MeshTopology("fields live on different meshes");
  const TriangleMesh& m = *u.mesh;
  DefectReport r;
  for (int t = 0; t < m.num_triangles(); ++t) {
    Vec2 c = m.centroid(t);
    if (region && !region(c)) continue;
    double a = m.chart_area(t) * g.sqrt_det(c);
    Vec2 Du = u.gradient(t), Dv = v.gradient(t);
    r.defect += a * nitsche_integrand(g, c, Du, Dv);
    r.area += a;
    Mat2 Gi = g.at(c).inverse();
    r.max_gradient = std::max({r.max_gradient, std::sqrt(Du.dot(Gi * Du)), std::sqrt(Dv.dot(Gi * Dv))});
  }
  r.tau = 1e-6 * r.area * (1 + r.max_gradient * r.max_gradient);
  return r;
}

// ---------------------------------------------------------------------------------------------

struct HorizonFlux {
  double estimate = 0.0;          // extrapolated r -> infinity, t -> 0
  double finite_radius_flux = 0.0;  // t-extrapolated flux at the outermost ladder radius
  std::vector<double> radii, fluxes, richardson;
};

namespace detail {

// Sphere flux of g(Du, D|x|) through the cell midpoint nearest to r.
inline double sphere_flux(const RadialInitialData& d, const RadialSolution& s, double r, double* at = nullptr) {
  size_t best = 0;
  for (size_t i = 1; i < s.mid.size(); ++i)
    if (std::abs(s.mid[i] - r) < std::abs(s.mid[best] - r)) best = i;
  double m = s.mid[best], w = s.flux_w[best];
  if (at) *at = m;
  // g(Du, D|x|) = u'/phi^2 = v/phi with v = w/sqrt(1-w^2).
  return sphere_area(d.n) * std::pow(m, d.n - 1) * w / (std::sqrt(1 - w * w) * d.phi(m));
}

}  // namespace detail

// Flux ladder at r_max / 2^j, linear extrapolation in t from the last two runs, then Richardson in r
// with tail exponent p (defaults to the metric decay q).
inline HorizonFlux horizon_area_flux(const BlowupResult& res, const RadialInitialData& d, double p = 0.0,
                                     int levels = 4, double rel_tol = 1e-3) {
  if (res.family.empty()) throw ExtrapolationFailure("empty solution family");
  if (p <= 0) p = d.q;
  const RadialSolution& s2 = res.family.back();
  const RadialSolution* s1 = res.family.size() > 1 ? &res.family[res.family.size() - 2] : nullptr;
  HorizonFlux h;
  double R = s2.r.back();
  for (int j = 0; j < levels; ++j) {
    double at = 0.0;
    double f2 = detail::sphere_flux(d, s2, R / std::ldexp(1.0, j), &at);
    double f = f2;
    if (s1) {
      double f1 = detail::sphere_flux(d, *s1, at);
      f = f2 - s2.t * (f1 - f2) / (s1->t - s2.t);
    }
    if (!std::isfinite(f)) throw ExtrapolationFailure("non-finite sphere flux");
    h.radii.push_back(at);
    h.fluxes.push_back(f);
  }
  for (int j = 0; j + 1 < levels; ++j) {
    double rho = std::pow(h.radii[j] / h.radii[j + 1], p);
    h.richardson.push_back((rho * h.fluxes[j] - h.fluxes[j + 1]) / (rho - 1));
  }
  h.finite_radius_flux = h.fluxes.front();
  h.estimate = h.richardson.front();
  if (h.richardson.size() > 1 &&
      std::abs(h.richardson[0] - h.richardson[1]) > rel_tol * std::max(1.0, std::abs(h.estimate)))
    throw ExtrapolationFailure("Richardson ladder does not settle: " + std::to_string(h.richardson[0]) + " vs " +
                               std::to_string(h.richardson[1]));
  return h;
}

struct DecayFit {
  double slope = 0.0;      // least-squares slope of log(|u| + r|u'|) against log r
  double K = 0.0;          // max of (|u| + r|u'|) r^{beta-2} on the outer half
  double K_doubled = 0.0;  // same for the run with doubled r_max, when given
  bool slope_ok = false, K_stable = true;
  bool pass() const { return slope_ok && K_stable; }
};

namespace detail {

inline void decay_samples(const RadialSolution& s, double beta, std::vector<double>& x, std::vector<double>& y,
                          double& K) {
  double r0 = std::max(s.r.front(), 1e-3 * s.r.back()), R = s.r.back();
  double lo = std::sqrt(r0 * R);
  K = 0.0;
  for (size_t i = 0; i < s.r.size(); ++i) {
    if (s.r[i] < lo) continue;
    double e = std::abs(s.u[i]) + s.r[i] * std::abs(s.du[i]);
    K = std::max(K, e * std::pow(s.r[i], beta - 2));
    if (e > 0) {
      x.push_back(std::log(s.r[i]));
      y.push_back(std::log(e));
    }
  }
}

}  // namespace detail

inline DecayFit decay_check(const RadialSolution& s, double beta, const RadialSolution* doubled = nullptr,
                            double slope_tol = 0.15, double K_tol = 0.2) {
  DecayFit f;
  std::vector<double> x, y;
  detail::decay_samples(s, beta, x, y, f.K);
  if (x.size() < 2) {
    // Identically zero on the outer half: decays at every rate.
    f.slope = -std::numeric_limits<double>::infinity();
    f.slope_ok = f.K == 0.0;
  } else {
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= x.size();
    my /= x.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    f.slope = sxy / sxx;
    f.slope_ok = std::abs(f.slope - (2 - beta)) <= slope_tol;
  }
  if (doubled) {
    std::vector<double> x2, y2;
    detail::decay_samples(*doubled, beta, x2, y2, f.K_doubled);
    f.K_stable = std::abs(f.K_doubled - f.K) <= K_tol * std::max(f.K, 1e-300) || (f.K == 0 && f.K_doubled == 0);
  }
  return f;
}

}  // namespace jss
