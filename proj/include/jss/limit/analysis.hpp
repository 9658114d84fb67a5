#pragma once
// What the regularized family does as k grows: which vertices stay bounded,
// which run off to plus or minus infinity, and the flux diagnostics that go
// with each case.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "jss/pmc/solver.hpp"

namespace jss {

enum class Region { omega0, omega_plus, omega_minus, undecided };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::omega0: return "omega0";
    case Region::omega_plus: return "omega_plus";
    case Region::omega_minus: return "omega_minus";
    case Region::undecided: return "undecided";
  }
  return "?";
}

// A polyline between two labels; `a` is the smaller enum value.
struct Interface {
  Region a = Region::omega0, b = Region::omega0;
  std::vector<Vec2> points;
  bool closed = false;
};

struct RegionDecomposition {
  std::vector<Region> labels;
  std::vector<Region> raw_labels;     // before boundary-layer vertices are reassigned
  std::vector<char> boundary_layer;
  DiscreteScalarField limit_field;    // last field of the schedule; the limit on omega0 vertices
  std::vector<Interface> interfaces;
  double k = 0.0;
  double undecided_fraction = 0.0;

  int count(Region r) const { return static_cast<int>(std::count(labels.begin(), labels.end(), r)); }
};

struct ClassifyOptions {
  double div_scale = 0.5;      // T_div = div_scale * sqrt(k) at the tail
  double rate_div = 0.5;       // divergent: growth per unit of sqrt(k) at least this
  double rate_bounded = 0.25;  // bounded: growth per unit of sqrt(k) at most this
  double acceleration = 2.0;   // divergent below T_div: rate at least this times the previous one
  double tau_newton = 1e-9;
  double max_undecided = 0.05;
  bool boundary_layer = true;
};

namespace detail {

inline std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& m) {
  std::vector<std::vector<int>> adj(m.num_vertices());
  for (const auto& T : m.triangles)
    for (int i = 0; i < 3; ++i) {
      adj[T[i]].push_back(T[(i + 1) % 3]);
      adj[T[i]].push_back(T[(i + 2) % 3]);
    }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

// Segments of the label field's level sets, chained into polylines.
inline std::vector<Interface> extract_interfaces(const TriangleMesh& m, const std::vector<Region>& lab) {
  using Key = std::pair<long long, long long>;
  auto key = [](const Vec2& p) { return Key(std::llround(p.x() * 1e10), std::llround(p.y() * 1e10)); };
  std::map<std::pair<Region, Region>, std::vector<std::pair<Vec2, Vec2>>> segs;
  auto pair_of = [&](int a, int b) { return std::minmax(lab[a], lab[b]); };
  for (const auto& T : m.triangles) {
    std::vector<int> cut;
    for (int e = 0; e < 3; ++e)
      if (lab[T[e]] != lab[T[(e + 1) % 3]]) cut.push_back(e);
    auto mid = [&](int e) -> Vec2 { return 0.5 * (m.vertices[T[e]] + m.vertices[T[(e + 1) % 3]]); };
    if (cut.size() == 2) {
      segs[pair_of(T[cut[0]], T[(cut[0] + 1) % 3])].push_back({mid(cut[0]), mid(cut[1])});
    } else if (cut.size() == 3) {
      Vec2 c = (m.vertices[T[0]] + m.vertices[T[1]] + m.vertices[T[2]]) / 3.0;
      for (int e : cut) segs[pair_of(T[e], T[(e + 1) % 3])].push_back({mid(e), c});
    }
  }
  std::vector<Interface> out;
  for (auto& [pr, list] : segs) {
    std::multimap<Key, int> at;
    for (int i = 0; i < static_cast<int>(list.size()); ++i) {
      at.emplace(key(list[i].first), i);
      at.emplace(key(list[i].second), i);
    }
    std::vector<char> used(list.size(), 0);
    auto next_from = [&](const Vec2& p) {
      auto [lo, hi] = at.equal_range(key(p));
      for (auto it = lo; it != hi; ++it)
        if (!used[it->second]) return it->second;
      return -1;
    };
    auto degree = [&](const Vec2& p) {
      auto [lo, hi] = at.equal_range(key(p));
      return std::distance(lo, hi);
    };
    // Open chains first (start at an endpoint of degree one), then loops.
    for (int pass = 0; pass < 2; ++pass)
      for (int s = 0; s < static_cast<int>(list.size()); ++s) {
        if (used[s]) continue;
        Vec2 start = list[s].first;
        if (pass == 0) {
          if (degree(list[s].first) == 1) start = list[s].first;
          else if (degree(list[s].second) == 1) start = list[s].second;
          else continue;
        }
        Interface I{pr.first, pr.second, {start}, false};
        Vec2 cur = start;
        for (int i = s; i >= 0; i = next_from(cur)) {
          used[i] = 1;
          cur = key(list[i].first) == key(cur) ? list[i].second : list[i].first;
          I.points.push_back(cur);
        }
        I.closed = pass == 1 && key(cur) == key(start);
        out.push_back(std::move(I));
      }
  }
  return out;
}

}  // namespace detail

// Ratio classifier on the tail of the schedule. A vertex diverges to +infinity
// when it is above T_div and has grown by at least rate_div per unit of sqrt(k)
// over the last step (and monotonically over the last two), or when that rate
// is above rate_bounded and at least twice the previous one. Bounded when the
// last step is Cauchy-small or grows by at most rate_bounded per unit of sqrt(k).
//
// With an auxiliary domain, vertices of the closed domain lying in the
// boundary layer (distance below exp(1 - T_div)) take the label of the nearest
// vertex outside the layer: the limit solution itself is unbounded there.
inline RegionDecomposition classify_regions(const std::vector<double>& ks, const std::vector<DiscreteScalarField>& fields,
                                            const ClassifyOptions& opt = {}, const AuxiliaryDomain* aux = nullptr) {
  if (ks.size() < 3 || ks.size() != fields.size()) throw DomainError("need at least three schedule entries");
  for (size_t i = 1; i < ks.size(); ++i)
    if (!(ks[i] > ks[i - 1]) || !(ks[i - 1] > 0)) throw DomainError("k schedule must be positive and increasing");
  const auto& mesh = fields.back().mesh;
  for (const auto& f : fields)
    if (f.mesh != mesh) throw MeshTopology("schedule fields live on different meshes");
  const size_t n = ks.size() - 1;
  const int nv = mesh->num_vertices();
  const double s1 = std::sqrt(ks[n]), s0 = std::sqrt(ks[n - 1]), sm = std::sqrt(ks[n - 2]);
  const double T = opt.div_scale * s1, tau_c = 10.0 * opt.tau_newton * ks[n];

  RegionDecomposition out;
  out.k = ks[n];
  out.raw_labels.assign(nv, Region::undecided);
  for (int v = 0; v < nv; ++v) {
    double u2 = fields[n].values[v], u1 = fields[n - 1].values[v], u0 = fields[n - 2].values[v];
    double d = u2 - u1, rate = d / (s1 - s0), prev = (u1 - u0) / (s0 - sm);
    // Growth superlinear in sqrt(k) (linear in k, as when u/k has a nonzero
    // limit) diverges before it crosses T_div.
    bool up = (u1 > u0 && u2 >= T && rate >= opt.rate_div) ||
              (rate >= opt.rate_bounded && rate >= opt.acceleration * std::max(prev, 0.0));
    bool down = (u1 < u0 && u2 <= -T && rate <= -opt.rate_div) ||
                (rate <= -opt.rate_bounded && rate <= opt.acceleration * std::min(prev, 0.0));
    Region& r = out.raw_labels[v];
    if (up) r = Region::omega_plus;
    else if (down) r = Region::omega_minus;
    else if (std::abs(d) <= tau_c || std::abs(rate) <= opt.rate_bounded) r = Region::omega0;
  }
  out.labels = out.raw_labels;
  out.boundary_layer.assign(nv, 0);

  if (aux && opt.boundary_layer) {
    if (aux->mesh != mesh) throw MeshTopology("auxiliary domain does not match the fields");
    const double width = std::exp(1.0 - T);
    for (int v = 0; v < nv; ++v)
      if (aux->vertex_crescent[v] < 0 && aux->domain.boundary_distance(mesh->vertices[v]) <= width)
        out.boundary_layer[v] = 1;
    auto adj = detail::vertex_adjacency(*mesh);
    std::deque<int> q;
    std::vector<char> seen(nv, 0);
    for (int v = 0; v < nv; ++v)
      if (aux->vertex_crescent[v] < 0 && !out.boundary_layer[v]) {
        seen[v] = 1;
        q.push_back(v);
      }
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int w : adj[v])
        if (!seen[w] && out.boundary_layer[w]) {
          seen[w] = 1;
          out.labels[w] = out.labels[v];
          q.push_back(w);
        }
    }
  }

  out.undecided_fraction = static_cast<double>(out.count(Region::undecided)) / nv;
  if (out.undecided_fraction > opt.max_undecided)
    throw InconclusiveLimit(std::to_string(out.count(Region::undecided)) + " of " + std::to_string(nv) +
                            " vertices undecided at k=" + std::to_string(ks[n]));
  out.limit_field = fields.back();
  out.interfaces = detail::extract_interfaces(*mesh, out.labels);
  return out;
}

inline RegionDecomposition classify_regions(const AuxiliaryDomain& aux, const std::vector<RegularizedSolution>& runs,
                                            const ClassifyOptions& opt = {}) {
  std::vector<double> ks;
  std::vector<DiscreteScalarField> f;
  for (const auto& r : runs) {
    ks.push_back(r.k);
    f.emplace_back(aux.mesh, r.u);
  }
  return classify_regions(ks, f, opt, &aux);
}

// X = Du / sqrt(1 + |Du|^2) per triangle, as a chart vector (index raised).
inline std::vector<Vec2> normal_field(const MetricField& g, const DiscreteScalarField& u) {
  const auto& m = *u.mesh;
  std::vector<Vec2> X(m.num_triangles());
  const double below_one = 1.0 - 4 * std::numeric_limits<double>::epsilon();
  for (int t = 0; t < m.num_triangles(); ++t) {
    Vec2 c = m.centroid(t);
    Mat2 G = g.at(c);
    Vec2 du = u.gradient(t);
    Vec2 up = G.inverse() * du;
    double n2 = du.dot(up);
    X[t] = up / std::sqrt(1.0 + n2);
    // Rounding pushes |X| to exactly 1 once |Du| is beyond 1e8.
    double nx = std::sqrt(X[t].dot(G * X[t]));
    if (nx >= below_one) X[t] *= below_one / nx;
  }
  return X;
}

inline double metric_norm(const MetricField& g, const Vec2& p, const Vec2& X) { return std::sqrt(X.dot(g.at(p) * X)); }

struct FluxProfile {
  CurveSegment curve;
  double offset = 0.0;
  std::vector<std::pair<double, double>> samples;  // (curve parameter, g(nu, X))

  double min_on(double a, double b) const {
    double s = std::numeric_limits<double>::infinity();
    for (auto [t, v] : samples)
      if (t >= a && t <= b) s = std::min(s, v);
    return s;
  }
  double max_on(double a, double b) const {
    double s = -std::numeric_limits<double>::infinity();
    for (auto [t, v] : samples)
      if (t >= a && t <= b) s = std::max(s, v);
    return s;
  }
};

// Samples g(nu, X) at distance d inside the domain along the curve; nu is the
// curve's outward unit normal, so plus arcs approach +1 and minus arcs -1.
inline FluxProfile boundary_flux_profile(const MetricField& g, const DiscreteScalarField& u, const CurveSegment& curve,
                                         double d, int samples = 200) {
  if (!(d > 0.0)) throw DomainError("offset must be positive");
  const auto& m = *u.mesh;
  TriangleLocator loc(m);
  auto X = normal_field(g, u);
  FluxProfile out{curve, d, {}};
  for (int i = 0; i < samples; ++i) {
    double t = (i + 0.5) / samples;
    Vec2 p = curve.position(t);
    Vec2 nu = outward_normal(g, curve, t);
    Vec2 q = g.kind() == MetricField::Kind::flat ? Vec2(p - d * nu) : exp_map(g, p, -d * nu);
    std::array<double, 3> b;
    int tri = loc.locate(q, b);
    if (tri < 0)
      throw OffsetTooLarge("offset point (" + std::to_string(q.x()) + ", " + std::to_string(q.y()) + ") leaves the mesh");
    out.samples.push_back({t, nu.dot(g.at(q) * X[tri])});
  }
  return out;
}

struct FluxBalance {
  double area_term = 0.0;         // integral of H_k over P
  double capillarity_term = 0.0;  // integral of u_k / k over P
  double boundary_flux = 0.0;     // discrete (Galerkin) flux out of P
  std::vector<double> length_terms;  // trace of g(nu, X) integrated over each boundary piece
  double discrepancy = 0.0;       // |area + capillarity - boundary_flux|

  double trace_flux() const {
    double s = 0.0;
    for (double x : length_terms) s += x;
    return s;
  }
};

namespace detail {

inline double polygon_perimeter(const MetricField& g, const GeneralizedPolygon& P) {
  double L = 0.0;
  for (const auto& pc : P.boundary_chain()) L += arc_length(g, pc.seg);
  return L;
}

// Vertices in the closed region: inside by winding number, or on its boundary.
inline std::vector<char> vertices_in(const TriangleMesh& m, const GeneralizedPolygon& P) {
  std::vector<std::vector<Vec2>> loops;
  double span = 1.0;
  for (const auto& l : P.loops) {
    std::vector<Vec2> poly;
    for (const auto& pc : l) {
      // Straight pieces need only their endpoints.
      auto probe = pc.seg.sample(65);
      double sag = 0.0;
      for (const auto& q : probe) sag = std::max(sag, polyline_distance({probe.front(), probe.back()}, q));
      auto pts = sag < 1e-12 ? std::vector<Vec2>{probe.front(), probe.back()} : pc.seg.sample(4096);
      if (!poly.empty()) poly.pop_back();
      poly.insert(poly.end(), pts.begin(), pts.end());
    }
    for (const auto& p : poly) span = std::max(span, p.norm());
    loops.push_back(std::move(poly));
  }
  const double tol = 1e-6 * span;
  std::vector<char> in(m.num_vertices(), 0);
  for (int v = 0; v < m.num_vertices(); ++v) {
    const Vec2& p = m.vertices[v];
    double w = 0.0, d = std::numeric_limits<double>::infinity();
    for (const auto& l : loops) {
      w += winding(l, p);
      d = std::min(d, polyline_distance(l, p));
    }
    in[v] = w > 0.5 || d <= tol;
  }
  return in;
}

}  // namespace detail

// Both sides of the discrete divergence identity over P. The Galerkin flux is
// the lumped operator summed over the vertices of P, so for a discrete
// solution the discrepancy is the mass-weighted Newton residual.
inline FluxBalance flux_balance(const MetricField& g, const DiscreteScalarField& u, const std::vector<double>& Hk,
                                double k, const GeneralizedPolygon& P, int samples_per_piece = 400) {
  const auto& m = *u.mesh;
  if (static_cast<int>(Hk.size()) != m.num_vertices()) throw MeshTopology("H_k does not match the mesh");
  auto E = element_geometry(g, m);
  auto mass = lumped_mass(m, E);
  auto div = mean_curvature_operator(g, m, u.values);
  auto in = detail::vertices_in(m, P);
  FluxBalance out;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!in[v]) continue;
    out.area_term += mass[v] * Hk[v];
    out.capillarity_term += mass[v] * u.values[v] / k;
    out.boundary_flux += mass[v] * div[v];
  }
  out.discrepancy = std::abs(out.area_term + out.capillarity_term - out.boundary_flux);

  // Trace integrals, taken from the triangle just inside each boundary point.
  TriangleLocator loc(m);
  auto X = normal_field(g, u);
  double diam = 0.0;
  for (const auto& p : m.vertices) diam = std::max(diam, p.norm());
  const double inward = 1e-9 * std::max(1.0, diam);
  for (const auto& pc : P.boundary_chain()) {
    double s = 0.0;
    for (int i = 0; i < samples_per_piece; ++i) {
      double t = (i + 0.5) / samples_per_piece;
      Vec2 p = pc.seg.position(t);
      Vec2 nu = outward_normal(g, pc.seg, t);
      // Curved pieces lie outside the chordal mesh boundary by the sag.
      std::array<double, 3> b;
      int tri = -1;
      for (double step = inward; tri < 0 && step < 1e-2 * std::max(1.0, diam); step *= 2) tri = loc.locate(p - step * nu, b);
      if (tri < 0) continue;  // corner holes
      s += nu.dot(g.at(p) * X[tri]) * speed(g, pc.seg, t) / samples_per_piece;
    }
    out.length_terms.push_back(s);
  }
  return out;
}

inline FluxBalance flux_balance(const AuxiliaryDomain& aux, const RegularizedSolution& sol, const GeneralizedPolygon& P) {
  RegularizedProblem prob(aux, {sol.k, sol.C});
  return flux_balance(aux.domain.metric(), DiscreteScalarField(aux.mesh, sol.u), prob.Hk(), sol.k, P);
}

inline double flux_identity_tolerance(const MetricField& g, const GeneralizedPolygon& P) {
  return 1e-8 * detail::polygon_perimeter(g, P);
}

struct ModulusTable {
  std::vector<double> delta, omega;
  bool monotone = true;  // omega non-increasing as delta decreases
};

// Empirical modulus of continuity of X over a family, on the vertices selected
// by `inside`. X at a vertex is the area-weighted mean of its triangles.
template <class Inside>
ModulusTable equicontinuity_check(const MetricField& g, const std::vector<DiscreteScalarField>& family, Inside inside,
                                  std::vector<double> deltas = {0.2, 0.1, 0.05, 0.02, 0.01}) {
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  ModulusTable out;
  out.delta = deltas;
  out.omega.assign(deltas.size(), 0.0);
  if (family.empty()) return out;
  const auto& m = *family.front().mesh;
  std::vector<int> sel;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (inside(m.vertices[v])) sel.push_back(v);
  // Uniform hash grid with cell size delta_max.
  const double cell = deltas.front();
  std::unordered_map<long long, std::vector<int>> grid;
  auto cell_of = [&](const Vec2& p) {
    return std::make_pair(static_cast<long long>(std::floor(p.x() / cell)), static_cast<long long>(std::floor(p.y() / cell)));
  };
  auto hash = [](long long i, long long j) { return i * 1000003LL + j; };
  for (int v : sel) {
    auto [i, j] = cell_of(m.vertices[v]);
    grid[hash(i, j)].push_back(v);
  }
  std::vector<double> area(m.num_vertices(), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int v : m.triangles[t]) area[v] += m.chart_area(t);
  for (const auto& f : family) {
    auto X = normal_field(g, f);
    std::vector<Vec2> Xv(m.num_vertices(), Vec2::Zero());
    for (int t = 0; t < m.num_triangles(); ++t)
      for (int v : m.triangles[t]) Xv[v] += m.chart_area(t) * X[t];
    for (int v = 0; v < m.num_vertices(); ++v)
      if (area[v] > 0) Xv[v] /= area[v];
    for (int v : sel) {
      auto [i, j] = cell_of(m.vertices[v]);
      for (long long di = -1; di <= 1; ++di)
        for (long long dj = -1; dj <= 1; ++dj) {
          auto it = grid.find(hash(i + di, j + dj));
          if (it == grid.end()) continue;
          for (int w : it->second) {
            if (w <= v) continue;
            double dist = (m.vertices[v] - m.vertices[w]).norm();
            double dx = metric_norm(g, m.vertices[v], Xv[v] - Xv[w]);
            for (size_t q = 0; q < deltas.size(); ++q)
              if (dist <= deltas[q]) out.omega[q] = std::max(out.omega[q], dx);
          }
        }
    }
  }
  for (size_t q = 1; q < deltas.size(); ++q) out.monotone = out.monotone && out.omega[q] <= out.omega[q - 1];
  return out;
}

enum class Verdict { CaseC_solution, CaseB_retranslate, CaseBprime_retranslate, Inconsistent };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::CaseC_solution: return "CaseC_solution";
    case Verdict::CaseB_retranslate: return "CaseB_retranslate";
    case Verdict::CaseBprime_retranslate: return "CaseBprime_retranslate";
    case Verdict::Inconsistent: return "Inconsistent";
  }
  return "?";
}

struct Dispatch {
  Verdict verdict = Verdict::Inconsistent;
  int anchor = -1;  // vertex for the retranslation cases
  std::string note;
};

namespace detail {

// For divergence to `sign` infinity: per component of that label, the extreme
// value towards the other sign over its interface vertices (the whole component
// if it has none); the anchor is the extreme of those towards `sign`.
inline int retranslation_anchor(const RegionDecomposition& R, Region label, int sign) {
  const auto& m = *R.limit_field.mesh;
  const auto& u = R.limit_field.values;
  auto adj = vertex_adjacency(m);
  std::vector<int> comp(m.num_vertices(), -1);
  int best = -1;
  double best_val = 0.0;
  for (int s = 0; s < m.num_vertices(); ++s) {
    if (R.labels[s] != label || comp[s] >= 0) continue;
    std::vector<int> members{s};
    comp[s] = s;
    for (size_t i = 0; i < members.size(); ++i)
      for (int w : adj[members[i]])
        if (comp[w] < 0 && R.labels[w] == label) {
          comp[w] = s;
          members.push_back(w);
        }
    std::vector<int> rim;
    for (int v : members)
      for (int w : adj[v])
        if (R.labels[w] != label) {
          rim.push_back(v);
          break;
        }
    const auto& pool = rim.empty() ? members : rim;
    int ext = pool.front();
    for (int v : pool)
      if (sign * u[v] < sign * u[ext]) ext = v;
    if (best < 0 || sign * u[ext] > sign * best_val) {
      best = ext;
      best_val = u[ext];
    }
  }
  return best;
}

}  // namespace detail

// Vertices of the closed domain decide the case; crescents do not.
inline Dispatch case_dispatch(const RegionDecomposition& R, bool flux_passed, const AuxiliaryDomain* aux = nullptr) {
  int n0 = 0, np = 0, nm = 0, nu = 0, total = 0;
  for (int v = 0; v < static_cast<int>(R.labels.size()); ++v) {
    if (aux && aux->vertex_crescent[v] >= 0) continue;
    ++total;
    switch (R.labels[v]) {
      case Region::omega0: ++n0; break;
      case Region::omega_plus: ++np; break;
      case Region::omega_minus: ++nm; break;
      case Region::undecided: ++nu; break;
    }
  }
  Dispatch d;
  if (total > 0 && n0 == total) {
    d.verdict = Verdict::CaseC_solution;
    return d;
  }
  if (total > 0 && nm == total) {
    d.verdict = Verdict::CaseB_retranslate;
    d.anchor = detail::retranslation_anchor(R, Region::omega_minus, -1);
    return d;
  }
  if (total > 0 && np == total) {
    d.verdict = Verdict::CaseBprime_retranslate;
    d.anchor = detail::retranslation_anchor(R, Region::omega_plus, +1);
    return d;
  }
  d.verdict = Verdict::Inconsistent;
  d.note = std::to_string(n0) + " bounded, " + std::to_string(np) + " plus, " + std::to_string(nm) + " minus, " +
           std::to_string(nu) + " undecided of " + std::to_string(total) + " domain vertices; ";
  d.note += flux_passed ? "partial divergence contradicts the flux conditions"
                        : "partial divergence is consistent with the failed flux conditions";
  return d;
}

inline std::vector<DiscreteScalarField> retranslate(const std::vector<DiscreteScalarField>& fields, int anchor) {
  std::vector<DiscreteScalarField> out;
  for (const auto& f : fields) {
    auto v = f.values;
    double z = f.values.at(anchor);
    for (double& x : v) x -= z;
    out.emplace_back(f.mesh, std::move(v));
  }
  return out;
}

struct LimitResult {
  RegionDecomposition regions;
  Dispatch dispatch;
  int retranslations = 0;
  std::vector<int> anchors;
};

// Classification and dispatch, retranslating at most `max_retranslations` times.
inline LimitResult resolve_limit(const std::vector<double>& ks, std::vector<DiscreteScalarField> fields, bool flux_passed,
                                 const ClassifyOptions& opt = {}, const AuxiliaryDomain* aux = nullptr,
                                 int max_retranslations = 2) {
  LimitResult out;
  for (;;) {
    out.regions = classify_regions(ks, fields, opt, aux);
    out.dispatch = case_dispatch(out.regions, flux_passed, aux);
    bool again = out.dispatch.verdict == Verdict::CaseB_retranslate ||
                 out.dispatch.verdict == Verdict::CaseBprime_retranslate;
    if (!again || out.retranslations >= max_retranslations) return out;
    out.anchors.push_back(out.dispatch.anchor);
    fields = retranslate(fields, out.dispatch.anchor);
    ++out.retranslations;
  }
}

// Lower obstacle on plus crescents and upper obstacle on minus crescents:
// the smallest signed slack over crescent vertices (negative means violated).
inline double crescent_barrier_margin(const AuxiliaryDomain& aux, const RegularizedSolution& sol) {
  RegularizedProblem prob(aux, {sol.k, sol.C});
  double s = std::numeric_limits<double>::infinity();
  for (int v = 0; v < aux.mesh->num_vertices(); ++v) {
    int c = aux.vertex_crescent[v];
    if (c < 0 || aux.vertex_t[v] <= 0.0) continue;
    if (aux.crescents[c].tag == Tag::plus) s = std::min(s, sol.u[v] - prob.lower()[v]);
    else s = std::min(s, prob.upper()[v] - sol.u[v]);
  }
  return s;
}

struct ArcStability {
  double rayleigh = 0.0;  // lowest eigenvalue of -d^2/ds^2 - (H0^2 + K)
  bool flagged = false;   // below -1e-3
};

// Stability of an interface polyline: P1 elements in arc length, Dirichlet at
// the ends of an open arc, periodic on a closed one.
inline ArcStability interface_stability(const MetricField& g, double H0, const std::vector<Vec2>& poly, bool closed,
                                        int nodes = 400) {
  if (poly.size() < 2) throw DegenerateCurve("interface needs at least two points");
  std::vector<double> s{0.0};
  for (size_t i = 1; i < poly.size(); ++i) s.push_back(s.back() + g.norm(0.5 * (poly[i] + poly[i - 1]), poly[i] - poly[i - 1]));
  const double L = s.back();
  if (!(L > 0.0)) throw DegenerateCurve("interface has zero length");
  auto at = [&](double a) -> Vec2 {
    size_t i = std::upper_bound(s.begin(), s.end(), a) - s.begin();
    i = std::clamp<size_t>(i, 1, s.size() - 1);
    double w = (a - s[i - 1]) / std::max(s[i] - s[i - 1], 1e-300);
    return (1 - w) * poly[i - 1] + w * poly[i];
  };
  const int ne = nodes;
  const double h = L / ne;
  const int nu = closed ? ne : ne - 1;  // unknowns
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nu, nu), M = Eigen::MatrixXd::Zero(nu, nu);
  auto idx = [&](int node) { return closed ? node % ne : node - 1; };
  for (int e = 0; e < ne; ++e) {
    double q = H0 * H0 + g.gauss_curvature(at((e + 0.5) * h));
    int ab[2] = {e, e + 1};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        int a = ab[i], b = ab[j];
        if (!closed && (a == 0 || a == ne || b == 0 || b == ne)) continue;
        double stiff = (i == j ? 1.0 : -1.0) / h;
        double mass = h * (i == j ? 1.0 / 3.0 : 1.0 / 6.0);
        K(idx(a), idx(b)) += stiff - q * mass;
        M(idx(a), idx(b)) += mass;
      }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigFailure("interface stability eigenproblem");
  ArcStability out;
  out.rayleigh = es.eigenvalues()(0);
  out.flagged = out.rayleigh < -1e-3;
  return out;
}

}  // namespace jss
