#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "jss/limit/analysis.hpp"

using namespace jss;
using namespace jss::fixtures;

namespace {

std::shared_ptr<const TriangleMesh> shared_grid(double a, double b, int n) {
  return std::make_shared<const TriangleMesh>(grid_mesh(a, b, n));
}

// u_k(x) = f(k, x) on a fixed mesh.
template <class F>
std::vector<DiscreteScalarField> family(std::shared_ptr<const TriangleMesh> m, const std::vector<double>& ks, F f) {
  std::vector<DiscreteScalarField> out;
  for (double k : ks) {
    std::vector<double> v(m->num_vertices());
    for (int i = 0; i < m->num_vertices(); ++i) v[i] = f(k, m->vertices[i]);
    out.emplace_back(m, v);
  }
  return out;
}

const std::vector<double> kSchedule{1, 4, 16, 64};

}  // namespace

TEST(Classify, ConstantFamilyIsBounded) {
  auto m = shared_grid(0, 1, 8);
  auto R = classify_regions(kSchedule, family(m, kSchedule, [](double, Vec2) { return 0.0; }));
  EXPECT_EQ(R.count(Region::omega0), m->num_vertices());
  EXPECT_TRUE(R.interfaces.empty());
  auto d = case_dispatch(R, true);
  EXPECT_EQ(d.verdict, Verdict::CaseC_solution);
  EXPECT_THROW(classify_regions({1, 4}, family(m, {1, 4}, [](double, Vec2) { return 0.0; })), DomainError);
}

TEST(Classify, UniformDivergenceDispatchesToRetranslation) {
  auto m = shared_grid(0, 1, 8);
  auto down = family(m, kSchedule, [](double k, Vec2 p) { return -k * (1 + p.x()); });
  auto R = classify_regions(kSchedule, down);
  EXPECT_EQ(R.count(Region::omega_minus), m->num_vertices());
  auto d = case_dispatch(R, true);
  EXPECT_EQ(d.verdict, Verdict::CaseB_retranslate);
  // No interface: the anchor is the component's highest vertex (x = 0).
  ASSERT_GE(d.anchor, 0);
  EXPECT_DOUBLE_EQ(m->vertices[d.anchor].x(), 0.0);

  auto up = family(m, kSchedule, [](double k, Vec2 p) { return k * (1 + p.y()); });
  auto d2 = case_dispatch(classify_regions(kSchedule, up), true);
  EXPECT_EQ(d2.verdict, Verdict::CaseBprime_retranslate);
  EXPECT_DOUBLE_EQ(m->vertices[d2.anchor].y(), 0.0);
}

TEST(Classify, RetranslationOfAConstantShiftConverges) {
  auto m = shared_grid(0, 1, 6);
  auto f = family(m, kSchedule, [](double k, Vec2 p) { return -3 * k + p.x(); });
  auto res = resolve_limit(kSchedule, f, true);
  EXPECT_EQ(res.retranslations, 1);
  EXPECT_EQ(res.dispatch.verdict, Verdict::CaseC_solution);
}

TEST(Classify, TooManyUndecidedVerticesIsInconclusive) {
  auto m = shared_grid(0, 1, 8);
  // Grows at 0.4 per unit of sqrt(k): neither bounded nor divergent.
  auto f = family(m, kSchedule, [](double k, Vec2) { return 0.4 * std::sqrt(k); });
  EXPECT_THROW(classify_regions(kSchedule, f), InconclusiveLimit);
}

TEST(Classify, InterfaceSeparatesHalfPlanes) {
  auto m = shared_grid(-1, 1, 10);
  auto f = family(m, kSchedule, [](double k, Vec2 p) { return p.x() > 0.05 ? k : 0.0; });
  auto R = classify_regions(kSchedule, f);
  ASSERT_EQ(R.interfaces.size(), 1u);
  const auto& I = R.interfaces[0];
  EXPECT_EQ(I.a, Region::omega0);
  EXPECT_EQ(I.b, Region::omega_plus);
  EXPECT_FALSE(I.closed);
  double ylo = 1, yhi = -1;
  for (const auto& p : I.points) {
    EXPECT_GT(p.x(), 0.0 - 1e-12);
    EXPECT_LT(p.x(), 0.2 + 1e-12);
    ylo = std::min(ylo, p.y());
    yhi = std::max(yhi, p.y());
  }
  EXPECT_NEAR(ylo, -1.0, 0.11);
  EXPECT_NEAR(yhi, 1.0, 0.11);
  // Mixed labels on a domain that passes the flux test cannot happen.
  EXPECT_EQ(case_dispatch(R, true).verdict, Verdict::Inconsistent);
}

TEST(NormalField, ZeroAffineAndSteep) {
  auto m = shared_grid(0, 1, 4);
  for (const auto& X : normal_field(MetricField::flat(), DiscreteScalarField(m, std::vector<double>(m->num_vertices(), 2.0))))
    EXPECT_EQ(X.norm(), 0.0);
  auto slope = [&](double a, double b) {
    std::vector<double> v;
    for (const auto& p : m->vertices) v.push_back(a * p.x() + b * p.y());
    return normal_field(MetricField::flat(), DiscreteScalarField(m, v));
  };
  for (const auto& X : slope(0.6, 0.8)) EXPECT_NEAR(X.norm(), 1 / std::sqrt(2.0), 1e-14);
  for (const auto& X : slope(1e12, 0)) EXPECT_LT(X.norm(), 1.0);
}

TEST(NormalField, NormBelowOneOnRandomFields) {
  std::mt19937_64 rng(20261019);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto m = shared_grid(0, 1, 6);
  for (int trial = 0; trial < 50; ++trial) {
    double scale = std::pow(10.0, trial % 10);
    std::vector<double> v(m->num_vertices());
    for (double& x : v) x = scale * gauss(rng);
    for (const auto& X : normal_field(MetricField::flat(), DiscreteScalarField(m, v))) ASSERT_LT(X.norm(), 1.0);
  }
}

TEST(NormalField, ScherkInterpolantNearPlusSide) {
  // Fine grid around the top-side midpoint.
  auto mesh = std::make_shared<TriangleMesh>();
  const int n = 40;
  const double y0 = pi / 2 - 0.05, y1 = pi / 2 - 0.004;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) mesh->vertices.emplace_back(-0.1 + 0.2 * i / n, y0 + (y1 - y0) * j / n);
  auto id = [&](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      mesh->triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh->triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  std::vector<double> v;
  for (const auto& p : mesh->vertices) v.push_back(std::log(std::cos(p.x()) / std::cos(p.y())));
  DiscreteScalarField u(mesh, v);
  auto X = normal_field(MetricField::flat(), u);
  TriangleLocator loc(*mesh);
  std::array<double, 3> b;
  int t = loc.locate({0.0, pi / 2 - 0.02}, b);
  ASSERT_GE(t, 0);
  // Analytic: Du = (-tan x, tan y), so at x = 0 the field is (0, sin y).
  EXPECT_GE(X[t].norm(), 0.95);
  EXPECT_GT(X[t].y(), 0.95);
  EXPECT_NEAR(X[t].y(), std::sin(pi / 2 - 0.02), 1e-3);
}

TEST(FluxBalance, ZeroDataGiveZero) {
  auto m = std::make_shared<const TriangleMesh>(disk_mesh(1.0, 0.2));
  DiscreteScalarField u(m, std::vector<double>(m->num_vertices(), 0.0));
  auto fb = flux_balance(MetricField::flat(), u, std::vector<double>(m->num_vertices(), 0.0), 4.0, disk().as_polygon());
  EXPECT_EQ(fb.area_term, 0.0);
  EXPECT_EQ(fb.capillarity_term, 0.0);
  EXPECT_NEAR(fb.boundary_flux, 0.0, 1e-14);
  EXPECT_NEAR(fb.trace_flux(), 0.0, 1e-14);
  auto prof = boundary_flux_profile(MetricField::flat(), u, disk().arcs()[0].curve, 0.1);
  for (auto [t, x] : prof.samples) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(boundary_flux_profile(MetricField::flat(), u, disk().arcs()[0].curve, 2.5), OffsetTooLarge);
}

TEST(FluxBalance, HemisphereCapFluxIsTwiceTheArea) {
  // u = -sqrt(1 - r^2) has div(Du/W) = 2; its flux through r = 1/2 is the
  // outward component r of X times the length, pi/2 = 2 * area.
  PolygonalDomain half(MetricField::flat(), {}, {{curves::circle_arc({0, 0}, 0.5, 0, 2 * pi, Tag::plus), -1, -1}}, 0.0);
  std::vector<double> err;
  for (double h : {0.05, 0.025}) {
    auto m = std::make_shared<const TriangleMesh>(disk_mesh(0.5, h));
    std::vector<double> v;
    for (const auto& p : m->vertices) v.push_back(-std::sqrt(1 - p.squaredNorm()));
    auto fb = flux_balance(MetricField::flat(), DiscreteScalarField(m, v), std::vector<double>(v.size(), 2.0), 1.0,
                           half.as_polygon());
    // Both sides use the same boundary triangles; they differ by the chord sag.
    EXPECT_NEAR(fb.trace_flux(), fb.boundary_flux, h * h);
    err.push_back(std::abs(fb.trace_flux() - pi / 2));
  }
  // X is the position vector, sampled at centroids a fraction of h inside.
  EXPECT_LT(err[0], 2 * 0.05);
  EXPECT_GE(std::log2(err[0] / err[1]), 0.8);
}

TEST(Stability, InterfaceRayleighQuotients) {
  auto g = MetricField::flat();
  // Segment of length 2: (pi/2)^2.
  std::vector<Vec2> seg{{0, 0}, {1, 0}, {2, 0}};
  EXPECT_NEAR(interface_stability(g, 0.0, seg, false).rayleigh, pi * pi / 4, 1e-4);
  // Unit-circle arcs with H0 = 1: (pi/L)^2 - 1, changing sign at L = pi.
  for (double L : {2.0, pi, 4.0}) {
    std::vector<Vec2> arc;
    for (int i = 0; i <= 400; ++i) arc.emplace_back(std::cos(L * i / 400), std::sin(L * i / 400));
    auto s = interface_stability(g, 1.0, arc, false);
    EXPECT_NEAR(s.rayleigh, std::pow(pi / L, 2) - 1, 1e-3) << L;
    EXPECT_EQ(s.flagged, L > pi + 0.1);
  }
  std::vector<Vec2> circle;
  for (int i = 0; i <= 400; ++i) circle.emplace_back(std::cos(2 * pi * i / 400), std::sin(2 * pi * i / 400));
  auto s = interface_stability(g, 1.0, circle, true);
  EXPECT_NEAR(s.rayleigh, -1.0, 1e-3);
  EXPECT_TRUE(s.flagged);
}

class ScherkLimit : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    aux_ = new AuxiliaryDomain(build_auxiliary_domain(scherk(), {0.05, 0.05, {}, 16}));
    runs_ = new std::vector<RegularizedSolution>(solve_schedule(*aux_, kSchedule));
  }
  static void TearDownTestSuite() {
    delete runs_;
    delete aux_;
  }
  static DiscreteScalarField last() { return DiscreteScalarField(aux_->mesh, runs_->back().u); }
  static AuxiliaryDomain* aux_;
  static std::vector<RegularizedSolution>* runs_;
};
AuxiliaryDomain* ScherkLimit::aux_ = nullptr;
std::vector<RegularizedSolution>* ScherkLimit::runs_ = nullptr;

TEST_F(ScherkLimit, DomainBoundedAndCrescentsFollowTheirTags) {
  auto R = classify_regions(*aux_, *runs_);
  for (int v = 0; v < aux_->mesh->num_vertices(); ++v) {
    int c = aux_->vertex_crescent[v];
    if (c < 0) {
      EXPECT_EQ(R.labels[v], Region::omega0) << v;
    } else {
      EXPECT_EQ(R.labels[v], aux_->crescents[c].tag == Tag::plus ? Region::omega_plus : Region::omega_minus) << v;
    }
  }
  // The layer is thin: exp(1 - 4) at k = 64.
  int layer = 0;
  for (char b : R.boundary_layer) layer += b;
  EXPECT_GT(layer, 0);
  auto d = case_dispatch(R, true, aux_);
  EXPECT_EQ(d.verdict, Verdict::CaseC_solution);
  // The interfaces are the four sides, each stable.
  for (const auto& I : R.interfaces) {
    EXPECT_EQ(I.a, Region::omega0);
    if (I.points.size() > 2) {
      EXPECT_FALSE(interface_stability(aux_->domain.metric(), 0.0, I.points, I.closed).flagged);
    }
  }
}

TEST_F(ScherkLimit, BoundaryFluxApproachesPlusMinusOne) {
  const auto& arcs = aux_->domain.arcs();
  for (const auto& a : arcs) {
    auto prof = boundary_flux_profile(aux_->domain.metric(), last(), a.curve, 0.02);
    if (a.curve.tag() == Tag::plus) EXPECT_GE(prof.min_on(0.1, 0.9), 0.95);
    else EXPECT_LE(prof.max_on(0.1, 0.9), -0.95);
    for (auto [t, x] : prof.samples) {
      EXPECT_GE(x, -1.0);
      EXPECT_LE(x, 1.0);
    }
  }
  EXPECT_THROW(boundary_flux_profile(aux_->domain.metric(), last(), arcs[0].curve, 4.0), OffsetTooLarge);
}

TEST_F(ScherkLimit, DivergenceIdentityHoldsOnEveryRun) {
  const auto& P = aux_->domain.as_polygon();
  const double tau = flux_identity_tolerance(aux_->domain.metric(), P);
  for (const auto& r : *runs_) {
    auto fb = flux_balance(*aux_, r, P);
    EXPECT_LE(fb.discrepancy, tau) << r.k;
    EXPECT_LE(fb.discrepancy, 1e-6);
    // The trace of X misses only the corner holes and an O(h) strip.
    EXPECT_NEAR(fb.trace_flux(), fb.boundary_flux, 0.05 * (1 + std::abs(fb.boundary_flux))) << r.k;
  }
}

TEST_F(ScherkLimit, DivergenceIdentityOnRandomSubRectangles) {
  std::mt19937_64 rng(20261019);
  std::uniform_real_distribution<double> c(-1.2, 1.2), s(0.2, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    double x = c(rng), y = c(rng), w = s(rng), h = s(rng);
    auto P = rectangle(w, h, trial % 2, 0.0, {x, y}).as_polygon();
    auto fb = flux_balance(*aux_, runs_->back(), P);
    EXPECT_LE(fb.discrepancy, flux_identity_tolerance(aux_->domain.metric(), P)) << trial;
  }
}

TEST_F(ScherkLimit, CrescentsStayAboveTheirBarriers) {
  for (const auto& r : *runs_) EXPECT_GE(crescent_barrier_margin(*aux_, r), -1e-9) << r.k;
}

TEST_F(ScherkLimit, NormalFieldIsEquicontinuous) {
  std::vector<DiscreteScalarField> fam;
  for (const auto& r : *runs_) fam.emplace_back(aux_->mesh, r.u);
  const double b = pi / 2 - 0.2;
  auto tab = equicontinuity_check(aux_->domain.metric(), fam,
                                  [&](const Vec2& p) { return std::abs(p.x()) <= b && std::abs(p.y()) <= b; });
  EXPECT_TRUE(tab.monotone);
  EXPECT_LE(tab.omega.back(), 0.2);
  EXPECT_GT(tab.omega.front(), tab.omega.back());
}

TEST(Equicontinuity, TrivialFamilies) {
  auto m = shared_grid(0, 1, 20);
  auto all = [](const Vec2&) { return true; };
  auto zero = family(m, {1}, [](double, Vec2) { return 0.0; });
  for (double w : equicontinuity_check(MetricField::flat(), zero, all).omega) EXPECT_EQ(w, 0.0);
  auto steep = family(m, {1}, [](double, Vec2 p) { return 1e3 * (p.x() + 0.5 * p.y()); });
  for (double w : equicontinuity_check(MetricField::flat(), steep, all).omega) EXPECT_LT(w, 1e-12);
}

TEST(RectangleLimit, FailedFluxDivergesUpward) {
  // Plus sides of length pi against minus sides of length 0.9 pi.
  auto aux = build_auxiliary_domain(rectangle(pi, 0.9 * pi), {0.05, 0.1, {}, 4});
  auto runs = solve_schedule(aux, kSchedule);
  auto R = classify_regions(aux, runs);
  int domain = 0, plus = 0;
  for (int v = 0; v < aux.mesh->num_vertices(); ++v)
    if (aux.vertex_crescent[v] < 0) {
      ++domain;
      plus += R.labels[v] == Region::omega_plus;
    }
  EXPECT_EQ(plus, domain);
  auto d = case_dispatch(R, false, &aux);
  EXPECT_EQ(d.verdict, Verdict::CaseBprime_retranslate);
  EXPECT_GE(d.anchor, 0);
}
