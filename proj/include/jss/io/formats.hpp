#pragma once
// Parsers for the three input formats.
//
// jss-domain/1
//   metric flat | metric sphere R | metric hyperbolic R | metric chart
//   g11 <expr>   g12 <expr>   g22 <expr>        (chart only, in x and y)
//   H0 <number>
//   corner <x> <y>                              (indexed from 0 in order)
//   arc <i> <j> <plus|minus> line
//   arc <i> <j> <plus|minus> auto [branch]      (constant curvature H0 arc)
//   arc <i> <j> <plus|minus> expr <x(t)> ; <y(t)>
//   arc closed <plus|minus> expr <x(t)> ; <y(t)>
//   candidate expr <x(t)> ; <y(t)>              (closed interior curve for the flux check)
//   auto-circles <xlo> <ylo> <xhi> <yhi> <nx> <ny>
//
// jang-radial/1
//   n <int>   phi2 <expr in r>   k_r <expr>   k_t <expr>
//   optional: q <number>   beta <number>   r_min <number>   name <word>
//
// mots-coeffs/1
//   mesh interval <length> <nodes> | mesh circle <length> <nodes> | mesh patch <lx> <ly> <nx> <ny>
//   field <name> <expr in x, y>     (evaluated at the nodes)
//   values <name> <v0> <v1> ...      (one value per node)
//   names: h_plus_k_sq scal_sigma J_nu mu div_X X_sq X_x X_y potential

#include <optional>
#include <string>

#include "jss/flux/enumerate.hpp"
#include "jss/geometry/domain.hpp"
#include "jss/geometry/geodesic.hpp"
#include "jss/io/text.hpp"
#include "jss/jang/radial.hpp"
#include "jss/mots/stability.hpp"

namespace jss::io {

struct DomainFile {
  PolygonalDomain domain;
  std::vector<ClosedCandidate> candidates;
  std::optional<std::array<double, 4>> circle_box;
  int circle_nx = 0, circle_ny = 0;

  EnumConfig enum_config() const {
    EnumConfig c;
    c.closed_candidates = candidates;
    if (circle_box) {
      c.auto_circles = true;
      c.grid_lo = Vec2((*circle_box)[0], (*circle_box)[1]);
      c.grid_hi = Vec2((*circle_box)[2], (*circle_box)[3]);
      c.grid_nx = circle_nx;
      c.grid_ny = circle_ny;
    }
    return c;
  }
};

namespace detail {

inline Tag parse_tag(const Line& l, size_t i) {
  if (i >= l.tokens.size()) l.fail("missing tag", i);
  if (l.tokens[i].text == "plus") return Tag::plus;
  if (l.tokens[i].text == "minus") return Tag::minus;
  l.fail("tag must be plus or minus, found '" + l.tokens[i].text + "'", i);
}

inline CurveSegment parse_expr_pair(const Line& l, size_t i, Tag tag, bool closed) {
  int col = 0;
  std::string s = l.rest(i, &col);
  auto semi = s.find(';');
  if (semi == std::string::npos) l.fail("expected '<x(t)> ; <y(t)>'", i);
  Expr x = parse_expr(l, s.substr(0, semi), col);
  Expr y = parse_expr(l, s.substr(semi + 1), col + static_cast<int>(semi) + 1);
  return curves::from_exprs(x, y, tag, closed);
}

struct PendingArc {
  const Line* line;
  int from = -1, to = -1;
  Tag tag = Tag::plus;
  std::string kind;
  int branch = 0;
  bool closed = false;
  CurveSegment curve;
};

}  // namespace detail

inline DomainFile parse_domain(const std::string& content) {
  auto lines = body(content, "jss-domain/1");
  std::optional<MetricField> metric;
  const Line* metric_line = nullptr;
  std::optional<Expr> g11, g12, g22;
  std::optional<double> H0;
  std::vector<Vec2> corners;
  std::vector<detail::PendingArc> arcs;
  std::vector<ClosedCandidate> candidates;
  std::optional<std::array<double, 4>> box;
  int nx = 0, ny = 0;

  for (const Line& l : lines) {
    const std::string& key = l.tokens[0].text;
    if (key == "metric") {
      if (metric_line) l.fail("a domain lives in a single chart; second metric block", 0);
      metric_line = &l;
      l.expect_size(2, 3);
      const std::string& kind = l.tokens[1].text;
      if (kind == "flat") {
        l.expect_size(2, 2);
        metric = MetricField::flat();
      } else if (kind == "sphere" || kind == "hyperbolic") {
        l.expect_size(3, 3);
        double R = parse_number(l, 2);
        if (!(R > 0)) l.fail("radius must be positive", 2);
        metric = kind == "sphere" ? MetricField::round_sphere(R) : MetricField::hyperbolic(R);
      } else if (kind == "chart") {
        l.expect_size(2, 2);
      } else {
        l.fail("unknown metric kind '" + kind + "'", 1);
      }
    } else if (key == "g11" || key == "g12" || key == "g22") {
      int col = 0;
      std::string s = l.rest(1, &col);
      auto& slot = key == "g11" ? g11 : key == "g12" ? g12 : g22;
      if (slot) l.fail("duplicate " + key, 0);
      slot = parse_expr(l, s, col);
    } else if (key == "H0") {
      l.expect_size(2, 2);
      if (H0) l.fail("duplicate H0", 0);
      H0 = parse_number(l, 1);
    } else if (key == "corner") {
      l.expect_size(3, 3);
      corners.emplace_back(parse_number(l, 1), parse_number(l, 2));
    } else if (key == "arc") {
      detail::PendingArc a;
      a.line = &l;
      size_t i = 1;
      bool closed = l.tokens.size() > 1 && l.tokens[1].text == "closed";
      a.closed = closed;
      if (closed) {
        i = 2;
      } else {
        a.from = parse_int(l, 1);
        a.to = parse_int(l, 2);
        i = 3;
      }
      a.tag = detail::parse_tag(l, i);
      if (i + 1 >= l.tokens.size()) l.fail("missing parameterization (line, auto or expr)", i + 1);
      a.kind = l.tokens[i + 1].text;
      if (a.kind == "expr") {
        a.curve = detail::parse_expr_pair(l, i + 2, a.tag, closed);
      } else if (closed) {
        l.fail("closed arcs need an expr parameterization", i + 1);
      } else if (a.kind == "auto") {
        l.expect_size(i + 2, i + 3);
        if (l.tokens.size() == i + 3) a.branch = parse_int(l, i + 2);
      } else if (a.kind == "line") {
        l.expect_size(i + 2, i + 2);
      } else {
        l.fail("unknown parameterization '" + a.kind + "'", i + 1);
      }
      arcs.push_back(std::move(a));
    } else if (key == "candidate") {
      if (l.tokens.size() < 2 || l.tokens[1].text != "expr") l.fail("expected 'candidate expr <x(t)> ; <y(t)>'", 1);
      candidates.push_back({detail::parse_expr_pair(l, 2, Tag::interior, true)});
    } else if (key == "auto-circles") {
      l.expect_size(7, 7);
      box = std::array<double, 4>{parse_number(l, 1), parse_number(l, 2), parse_number(l, 3), parse_number(l, 4)};
      nx = parse_int(l, 5);
      ny = parse_int(l, 6);
      if (nx < 1 || ny < 1) l.fail("grid sizes must be positive", nx < 1 ? 5 : 6);
    } else {
      l.fail("unknown key '" + key + "'", 0);
    }
  }

  int last = lines.empty() ? 1 : lines.back().number + 1;
  if (!metric_line) throw ParseError("missing metric block", last, 1);
  if (!metric) {
    if (!g11 || !g12 || !g22) metric_line->fail("chart metric needs g11, g12 and g22", 1);
    metric = MetricField::chart(*g11, *g12, *g22);
  } else if (g11 || g12 || g22) {
    metric_line->fail("coefficients given for a named metric", 1);
  }
  if (!H0) throw ParseError("missing H0", last, 1);
  if (arcs.empty()) throw ParseError("no arcs", last, 1);

  std::vector<DomainArc> out;
  for (auto& a : arcs) {
    const Line& l = *a.line;
    if (!a.closed) {
      int n = static_cast<int>(corners.size());
      if (a.from < 0 || a.from >= n) l.fail("corner index out of range", 1);
      if (a.to < 0 || a.to >= n) l.fail("corner index out of range", 2);
    }
    try {
      if (a.kind == "line") {
        a.curve = curves::line(corners[a.from], corners[a.to], a.tag);
      } else if (a.kind == "auto") {
        auto c = constant_curvature_arcs(*metric, corners[a.from], corners[a.to], *H0);
        if (a.branch < 0 || a.branch >= static_cast<int>(c.size()))
          l.fail("auto branch must be below " + std::to_string(c.size()), l.tokens.size() - 1);
        a.curve = c[a.branch].with_tag(a.tag);
      }
    } catch (const NoArcFound& e) {
      l.fail(e.what(), 0);
    }
    out.push_back({a.curve, a.from, a.to});
  }
  try {
    DomainFile f{PolygonalDomain(*metric, corners, out, *H0), std::move(candidates), box, nx, ny};
    return f;
  } catch (const InvalidDomain& e) {
    throw ParseError(e.what(), last, 1);
  }
}

inline RadialInitialData parse_radial(const std::string& content) {
  auto lines = body(content, "jang-radial/1");
  RadialInitialData d;
  d.name = "file";
  bool have_n = false, have_phi = false;
  for (const Line& l : lines) {
    const std::string& key = l.tokens[0].text;
    int col = 0;
    if (key == "n") {
      l.expect_size(2, 2);
      d.n = parse_int(l, 1);
      have_n = true;
    } else if (key == "phi2" || key == "k_r" || key == "k_t") {
      std::string text = l.rest(1, &col);
      Expr e = parse_expr(l, text, col);
      (key == "phi2" ? d.phi2 : key == "k_r" ? d.k_r : d.k_t) = e;
      have_phi |= key == "phi2";
    } else if (key == "q" || key == "beta" || key == "r_min") {
      l.expect_size(2, 2);
      (key == "q" ? d.q : key == "beta" ? d.beta : d.r_min) = parse_number(l, 1);
    } else if (key == "name") {
      l.expect_size(2, 2);
      d.name = l.tokens[1].text;
    } else {
      l.fail("unknown key '" + key + "'", 0);
    }
  }
  int last = lines.empty() ? 1 : lines.back().number + 1;
  if (!have_n) throw ParseError("missing n", last, 1);
  if (!have_phi) throw ParseError("missing phi2", last, 1);
  return d;
}

inline StabilityCoefficients parse_mots_coeffs(const std::string& content) {
  auto lines = body(content, "mots-coeffs/1");
  if (lines.empty() || lines[0].tokens[0].text != "mesh")
    throw ParseError("first entry must be the mesh", lines.empty() ? 2 : lines[0].number, 1);
  const Line& m = lines[0];
  if (m.tokens.size() < 2) m.fail("missing mesh kind", 1);
  SigmaMesh mesh;
  const std::string& kind = m.tokens[1].text;
  if (kind == "interval" || kind == "circle") {
    m.expect_size(4, 4);
    double L = parse_number(m, 2);
    int n = parse_int(m, 3);
    if (!(L > 0)) m.fail("length must be positive", 2);
    if (n < (kind == "interval" ? 3 : 3)) m.fail("need at least 3 nodes", 3);
    mesh = kind == "interval" ? SigmaMesh::interval(L, n) : SigmaMesh::circle(L, n);
  } else if (kind == "patch") {
    m.expect_size(6, 6);
    double lx = parse_number(m, 2), ly = parse_number(m, 3);
    int nx = parse_int(m, 4), ny = parse_int(m, 5);
    if (!(lx > 0) || !(ly > 0)) m.fail("lengths must be positive", 2);
    if (nx < 3 || ny < 3) m.fail("need at least 3 nodes per side", 4);
    mesh = SigmaMesh::patch(lx, ly, nx, ny);
  } else {
    m.fail("unknown mesh kind '" + kind + "'", 1);
  }
  StabilityCoefficients c(mesh);
  const int N = mesh.size();
  auto node = [&](int i) -> Vec2 {
    int ix = i % mesh.nx, iy = i / mesh.nx;
    return Vec2(ix * mesh.hx(), mesh.kind == SigmaMesh::Kind::patch ? iy * mesh.hy() : 0.0);
  };
  auto slot = [&](const Line& l) -> std::function<void(int, double)> {
    if (l.tokens.size() < 2) l.fail("missing field name", 1);
    const std::string& n = l.tokens[1].text;
    if (n == "h_plus_k_sq") return [&](int i, double v) { c.h_plus_k_sq[i] = v; };
    if (n == "scal_sigma") return [&](int i, double v) { c.scal_sigma[i] = v; };
    if (n == "J_nu") return [&](int i, double v) { c.J_nu[i] = v; };
    if (n == "mu") return [&](int i, double v) { c.mu[i] = v; };
    if (n == "div_X") return [&](int i, double v) { c.div_X[i] = v; };
    if (n == "X_sq") return [&](int i, double v) { c.X_sq[i] = v; };
    if (n == "X_x") return [&](int i, double v) { c.X[i].x() = v; };
    if (n == "X_y") return [&](int i, double v) { c.X[i].y() = v; };
    // A bare zeroth-order term, stored through the scalar curvature slot.
    if (n == "potential") return [&](int i, double v) { c.scal_sigma[i] = 2 * v; };
    l.fail("unknown field '" + n + "'", 1);
  };
  for (size_t k = 1; k < lines.size(); ++k) {
    const Line& l = lines[k];
    const std::string& key = l.tokens[0].text;
    if (key == "field") {
      auto set = slot(l);
      int col = 0;
      std::string text = l.rest(2, &col);
      Expr e = parse_expr(l, text, col);
      for (int i = 0; i < N; ++i) {
        Vec2 p = node(i);
        double v = e(p.x(), p.y());
        if (!std::isfinite(v)) l.fail("field is not finite at node " + std::to_string(i), 2);
        set(i, v);
      }
    } else if (key == "values") {
      auto set = slot(l);
      if (static_cast<int>(l.tokens.size()) - 2 != N)
        l.fail("expected " + std::to_string(N) + " values, found " + std::to_string(l.tokens.size() - 2),
               std::min(l.tokens.size(), static_cast<size_t>(N) + 2));
      for (int i = 0; i < N; ++i) set(i, parse_number(l, i + 2));
    } else if (key == "mesh") {
      l.fail("duplicate mesh", 0);
    } else {
      l.fail("unknown key '" + key + "'", 0);
    }
  }
  return c;
}

}  // namespace jss::io
