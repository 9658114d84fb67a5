#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "jss/flux/enumerate.hpp"

namespace jss {

struct TotalFlux {
  double lhs = 0.0, rhs = 0.0;
  bool passes = false;
};

enum class Condition { A, B };

struct PolygonFlux {
  int polygon_id = -1;
  Condition condition = Condition::A;
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
  bool passes = false;
};

struct FluxReport {
  TotalFlux total_flux;
  std::vector<PolygonFlux> per_polygon;
  bool verdict = false;
  int polygons = 0;
  int pruned_segments = 0;
  std::optional<bool> unpruned_verdict;  // set when stable_only changed the verdict
  std::vector<std::string> notes;
};

inline double flux_tolerance(const PolygonalDomain& dom) { return 1e-7 * dom.diameter(); }

inline TotalFlux check_total_flux(const PolygonalDomain& dom) {
  TotalFlux t;
  t.lhs = dom.boundary_length(Tag::plus);
  t.rhs = dom.H0() * dom.total_area() + dom.boundary_length(Tag::minus);
  t.passes = std::abs(t.lhs - t.rhs) <= flux_tolerance(dom) * std::max(1.0, std::abs(t.lhs));
  return t;
}

inline std::array<PolygonFlux, 2> check_polygon_flux(const PolygonalDomain& dom, const GeneralizedPolygon& P,
                                                     int id = -1) {
  const auto& g = dom.metric();
  double aP = area(g, P), aOmega = dom.total_area();
  if (std::abs(aP - aOmega) <= tol::area * std::max(1.0, aOmega))
    throw NotProperSubset("polygon area equals the domain area");
  double perimeter = 0.0, plus = 0.0, minus = 0.0;
  for (const auto& pc : P.boundary_chain()) {
    double L = arc_length(g, pc.seg);
    perimeter += L;
    if (pc.provenance == Provenance::domain_arc) {
      Tag t = dom.arcs()[pc.index].curve.tag();
      if (t == Tag::plus) plus += L;
      if (t == Tag::minus) minus += L;
    }
  }
  double tau = flux_tolerance(dom);
  std::array<PolygonFlux, 2> out;
  out[0] = {id, Condition::A, 2.0 * plus, perimeter + dom.H0() * aP, 0.0, false};
  out[1] = {id, Condition::B, 2.0 * minus, perimeter - dom.H0() * aP, 0.0, false};
  for (auto& r : out) {
    r.margin = r.rhs - r.lhs;
    r.passes = r.margin > tau;
  }
  return out;
}

namespace detail {

inline FluxReport run_checks(const PolygonalDomain& dom, const EnumConfig& cfg) {
  FluxReport rep;
  rep.total_flux = check_total_flux(dom);
  SegmentSet S;
  auto polys = enumerate_generalized_polygons(dom, cfg, &S);
  rep.notes = S.notes;
  rep.pruned_segments = S.pruned_unstable;
  bool ok = rep.total_flux.passes;
  int id = 0;
  for (const auto& P : polys) {
    try {
      for (const auto& r : check_polygon_flux(dom, P, id)) {
        rep.per_polygon.push_back(r);
        ok = ok && r.passes;
      }
    } catch (const NotProperSubset&) {
      // The domain itself is covered by the total flux condition.
    }
    ++id;
  }
  rep.polygons = static_cast<int>(polys.size());
  rep.verdict = ok;
  return rep;
}

}  // namespace detail

inline FluxReport verify_jss(const PolygonalDomain& dom, const EnumConfig& cfg = {}) {
  FluxReport rep = detail::run_checks(dom, cfg);
  if (cfg.stable_only) {
    EnumConfig all = cfg;
    all.stable_only = false;
    FluxReport full = detail::run_checks(dom, all);
    if (full.verdict != rep.verdict) {
      rep.unpruned_verdict = full.verdict;
      rep.notes.push_back("pruning unstable segments changed the verdict");
    }
  }
  return rep;
}

}  // namespace jss
