#pragma once
// End-to-end runs and their on-disk form: flux check, regularized solves,
// limit classification, and the radial Jang family.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>

#include <json.hpp>

#include "jss/flux/check.hpp"
#include "jss/io/formats.hpp"
#include "jss/limit/analysis.hpp"
#include "jss/pmc/solver.hpp"
#include "jss/uniqueness/tools.hpp"

namespace jss {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------------------------
// Scherk-type problem

struct ScherkOptions {
  double eps = 0.05;
  double h = 0.02;
  double grade = 16.0;
  std::vector<double> ks{1, 4, 16, 64};
  double C = 0.0;  // 0: the solver's default
  NewtonOptions newton;
  ClassifyOptions classify;
  int max_corners = 12;
  bool stable_only = false;
  bool force = false;              // solve even when the flux conditions fail
  double profile_distance = 0.02;  // offset of the boundary flux profiles
  int profile_samples = 101;
};

struct ScherkRun {
  FluxReport flux;
  std::optional<AuxiliaryDomain> aux;
  std::vector<RegularizedSolution> runs;
  std::optional<LimitResult> limit;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage

  bool solved() const { return limit.has_value(); }
  bool success() const { return solved() && limit->dispatch.verdict == Verdict::CaseC_solution; }
};

namespace detail {

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& out) : out_(out) {}
  template <class F>
  auto operator()(const std::string& name, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    struct Record {
      StageTimer* s;
      std::string n;
      std::chrono::steady_clock::time_point t0;
      ~Record() {
        s->out_.emplace_back(n, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
    } rec{this, name, t0};
    return f();
  }

 private:
  std::vector<std::pair<std::string, double>>& out_;
};

}  // namespace detail

inline ScherkRun run_scherk_pipeline(const io::DomainFile& in, const ScherkOptions& opt) {
  ScherkRun out;
  detail::StageTimer timed(out.timings);
  EnumConfig cfg = in.enum_config();
  cfg.max_corners = opt.max_corners;
  cfg.stable_only = opt.stable_only;
  out.flux = timed("flux", [&] { return verify_jss(in.domain, cfg); });
  if (!out.flux.verdict && !opt.force) return out;
  out.aux.emplace(timed("mesh", [&] { return build_auxiliary_domain(in.domain, {opt.eps, opt.h, {}, opt.grade}); }));
  out.runs = timed("solve", [&] { return solve_schedule(*out.aux, opt.ks, opt.C, opt.newton); });
  out.limit = timed("classify", [&] {
    std::vector<DiscreteScalarField> f;
    for (const auto& r : out.runs) f.emplace_back(out.aux->mesh, r.u);
    return resolve_limit(opt.ks, std::move(f), out.flux.verdict, opt.classify, &*out.aux);
  });
  return out;
}

inline const char* condition_name(Condition c) { return c == Condition::A ? "A" : "B"; }

inline void write_flux_ledger(const std::string& path, const FluxReport& rep) {
  io::CsvWriter w(path, {"polygon_id", "condition", "lhs", "rhs", "margin", "passes"});
  // The whole domain first, as polygon -1: the total flux balance.
  w.row(-1, "total", rep.total_flux.lhs, rep.total_flux.rhs, rep.total_flux.lhs - rep.total_flux.rhs,
        rep.total_flux.passes);
  for (const auto& p : rep.per_polygon)
    w.row(p.polygon_id, condition_name(p.condition), p.lhs, p.rhs, p.margin, p.passes);
}

inline Json flux_json(const FluxReport& rep) {
  Json j;
  j["verdict"] = rep.verdict;
  j["polygons"] = rep.polygons;
  j["total_flux"] = {{"lhs", rep.total_flux.lhs}, {"rhs", rep.total_flux.rhs}, {"passes", rep.total_flux.passes}};
  j["pruned_segments"] = rep.pruned_segments;
  if (rep.unpruned_verdict) j["unpruned_verdict"] = *rep.unpruned_verdict;
  j["notes"] = rep.notes;
  return j;
}

inline std::string k_label(double k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", k);
  return buf;
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path + "'", 0, 0);
  f << j.dump(2) << '\n';
}

// Per-vertex |Du|_g from the area-weighted triangle gradients.
inline std::vector<double> vertex_gradient_norm(const MetricField& g, const DiscreteScalarField& u) {
  const auto& m = *u.mesh;
  std::vector<double> num(m.num_vertices(), 0.0), den(m.num_vertices(), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    Vec2 c = m.centroid(t), D = u.gradient(t);
    double n = std::sqrt(D.dot(g.at(c).inverse() * D)), a = m.chart_area(t);
    for (int v : m.triangles[t]) {
      num[v] += a * n;
      den[v] += a;
    }
  }
  for (size_t v = 0; v < num.size(); ++v) num[v] = den[v] > 0 ? num[v] / den[v] : 0.0;
  return num;
}

// Writes everything except timings into `dir`; all files are reproducible bit for bit.
inline void write_scherk_run(const std::string& dir, const std::string& domain_text, const ScherkRun& run,
                             const ScherkOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
  {
    std::ofstream f(at("domain.jss"), std::ios::binary);
    f << domain_text;
  }
  write_flux_ledger(at("flux_ledger.csv"), run.flux);

  Json man;
  man["schema"] = "jss-run/1";
  man["kind"] = "scherk";
  man["input_hash"] = io::content_hash(domain_text);
  man["options"] = {{"eps", opt.eps},
                    {"h", opt.h},
                    {"grade", opt.grade},
                    {"k_schedule", opt.ks},
                    {"C", opt.C},
                    {"max_corners", opt.max_corners},
                    {"stable_only", opt.stable_only},
                    {"force", opt.force},
                    {"profile_distance", opt.profile_distance}};
  man["tolerances"] = {{"tau_newton", opt.newton.tol},
                       {"max_iter", opt.newton.max_iter},
                       {"armijo", opt.newton.armijo},
                       {"backtrack", opt.newton.backtrack},
                       {"damping_floor", opt.newton.floor},
                       {"div_scale", opt.classify.div_scale},
                       {"rate_div", opt.classify.rate_div},
                       {"rate_bounded", opt.classify.rate_bounded},
                       {"tau_cauchy_factor", 10 * opt.classify.tau_newton},
                       {"max_undecided", opt.classify.max_undecided}};
  man["flux"] = flux_json(run.flux);
  man["solved"] = run.solved();
  if (!run.solved()) {
    man["verdict"] = "not_solved";
    man["note"] = "flux conditions failed; rerun with --force to solve anyway";
    write_json(at("manifest.json"), man);
    return;
  }
  const AuxiliaryDomain& aux = *run.aux;
  const TriangleMesh& m = *aux.mesh;
  man["mesh"] = {{"vertices", m.num_vertices()}, {"triangles", m.num_triangles()}, {"r_corner", aux.r_corner},
                 {"sup_H_deviation", aux.sup_H_deviation}};
  {
    io::CsvWriter v(at("mesh_vertices.csv"), {"vertex", "x", "y", "crescent"});
    for (int i = 0; i < m.num_vertices(); ++i) v.row(i, m.vertices[i].x(), m.vertices[i].y(), aux.vertex_crescent[i]);
    io::CsvWriter t(at("mesh_triangles.csv"), {"a", "b", "c"});
    for (const auto& T : m.triangles) t.row(T[0], T[1], T[2]);
  }
  const MetricField& g = aux.domain.metric();
  Json runs = Json::array();
  for (const auto& r : run.runs) {
    std::string file = "solution_k" + k_label(r.k) + ".csv";
    DiscreteScalarField u(aux.mesh, r.u);
    auto grad = vertex_gradient_norm(g, u);
    io::CsvWriter w(at(file), {"x", "y", "u", "grad_norm", "inv_W"});
    for (int i = 0; i < m.num_vertices(); ++i)
      w.row(m.vertices[i].x(), m.vertices[i].y(), r.u[i], grad[i], 1 / std::sqrt(1 + grad[i] * grad[i]));
    runs.push_back({{"k", r.k},
                    {"C", r.C},
                    {"file", file},
                    {"newton_iterations", r.newton.iterations},
                    {"newton_residual", r.newton.residual},
                    {"roundoff_floor", r.newton.roundoff_floor},
                    {"converged", r.newton.converged},
                    {"perron_sweeps", r.perron_sweeps},
                    {"final_residual", r.final_residual},
                    {"crescent_barrier_margin", crescent_barrier_margin(aux, r)}});
  }
  man["runs"] = runs;

  const LimitResult& L = *run.limit;
  {
    io::CsvWriter w(at("classification.csv"), {"vertex", "label"});
    for (size_t v = 0; v < L.regions.labels.size(); ++v) w.row(static_cast<int>(v), region_name(L.regions.labels[v]));
    io::CsvWriter p(at("interfaces.csv"), {"interface", "a", "b", "closed", "x", "y"});
    for (size_t i = 0; i < L.regions.interfaces.size(); ++i) {
      const auto& I = L.regions.interfaces[i];
      for (const auto& q : I.points)
        p.row(static_cast<int>(i), region_name(I.a), region_name(I.b), I.closed, q.x(), q.y());
    }
  }
  {
    DiscreteScalarField last(aux.mesh, run.runs.back().u);
    io::CsvWriter w(at("flux_profiles.csv"), {"arc", "tag", "t", "flux"});
    Json prof = Json::array();
    for (size_t a = 0; a < aux.domain.arcs().size(); ++a) {
      const auto& c = aux.domain.arcs()[a].curve;
      try {
        auto fp = boundary_flux_profile(g, last, c, opt.profile_distance, opt.profile_samples);
        for (auto [t, x] : fp.samples) w.row(static_cast<int>(a), tag_name(c.tag()), t, x);
        prof.push_back({{"arc", a}, {"tag", tag_name(c.tag())}, {"min", fp.min_on(0.1, 0.9)}, {"max", fp.max_on(0.1, 0.9)}});
      } catch (const Error& e) {
        prof.push_back({{"arc", a}, {"tag", tag_name(c.tag())}, {"error", e.what()}});
      }
    }
    man["flux_profiles"] = prof;
  }
  man["classification"] = {{"k", L.regions.k},
                           {"omega0", L.regions.count(Region::omega0)},
                           {"omega_plus", L.regions.count(Region::omega_plus)},
                           {"omega_minus", L.regions.count(Region::omega_minus)},
                           {"undecided", L.regions.count(Region::undecided)},
                           {"interfaces", L.regions.interfaces.size()}};
  man["verdict"] = verdict_name(L.dispatch.verdict);
  man["retranslations"] = L.retranslations;
  man["anchors"] = L.anchors;
  if (!L.dispatch.note.empty()) man["note"] = L.dispatch.note;
  {
    std::ofstream f(at("verdict.txt"), std::ios::binary);
    f << verdict_name(L.dispatch.verdict) << '\n';
    if (!L.dispatch.note.empty()) f << L.dispatch.note << '\n';
  }
  write_json(at("manifest.json"), man);
}

inline void write_timings(const std::string& dir, const std::vector<std::pair<std::string, double>>& timings,
                          int threads) {
  Json j;
  for (const auto& [n, s] : timings) j["seconds"][n] = s;
  j["threads"] = threads;
  write_json((std::filesystem::path(dir) / "timings.json").string(), j);
}

inline Json read_json(const std::string& path) {
  std::string text = io::read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what(), 1, 1);
  }
}

// The last field of a Scherk run directory, on the mesh stored with it.
struct StoredField {
  io::DomainFile domain;
  std::shared_ptr<TriangleMesh> mesh;
  std::vector<int> crescent;
  DiscreteScalarField u;
  double k = 0.0;
};

inline StoredField load_scherk_field(const std::string& dir) {
  namespace fs = std::filesystem;
  auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
  Json man = read_json(at("manifest.json"));
  if (man.value("schema", "") != "jss-run/1" || man.value("kind", "") != "scherk")
    throw ParseError(dir + ": not a Scherk run directory", 1, 1);
  if (!man.value("solved", false)) throw ParseError(dir + ": run has no solution", 1, 1);
  StoredField s{io::parse_domain(io::read_file(at("domain.jss"))), std::make_shared<TriangleMesh>(), {}, {}, 0.0};
  auto V = io::read_csv(at("mesh_vertices.csv"));
  auto xs = V.numbers("x"), ys = V.numbers("y"), cr = V.numbers("crescent");
  for (size_t i = 0; i < xs.size(); ++i) {
    s.mesh->vertices.emplace_back(xs[i], ys[i]);
    s.crescent.push_back(static_cast<int>(cr[i]));
  }
  auto T = io::read_csv(at("mesh_triangles.csv"));
  auto a = T.numbers("a"), b = T.numbers("b"), c = T.numbers("c");
  for (size_t i = 0; i < a.size(); ++i)
    s.mesh->triangles.push_back({static_cast<int>(a[i]), static_cast<int>(b[i]), static_cast<int>(c[i])});
  s.mesh->check();
  const Json& last = man.at("runs").back();
  s.k = last.at("k").get<double>();
  auto U = io::read_csv(at(last.at("file").get<std::string>()));
  s.u = DiscreteScalarField(s.mesh, U.numbers("u"));
  return s;
}

// Uniqueness defect between the last fields of two runs, over the triangles of the domain whose
// centroid keeps a chart distance `margin` from the boundary, away from the blow-up layer.
inline DefectReport compare_runs(const StoredField& A, const StoredField& B, double margin = 0.2) {
  const auto& ma = *A.mesh;
  const auto& mb = *B.mesh;
  if (ma.vertices != mb.vertices || ma.triangles != mb.triangles) throw MeshTopology("runs use different meshes");
  DiscreteScalarField v(A.mesh, B.u.values);
  const auto& dom = A.domain.domain;
  return uniqueness_defect(dom.metric(), A.u, v, [&](const Vec2& p) { return dom.contains(p) && dom.boundary_distance(p) >= margin; });
}

// ---------------------------------------------------------------------------------------------
// Radial Jang family

inline void write_radial_run(const std::string& dir, const std::string& input_text, const RadialInitialData& d,
                             const BlowupResult& res, const BlowupOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
  {
    std::ofstream f(at("radial.jss"), std::ios::binary);
    f << input_text;
  }
  Json man;
  man["schema"] = "jss-run/1";
  man["kind"] = "jang-radial";
  man["input_hash"] = io::content_hash(input_text);
  man["sign"] = res.sign == BlowupSign::minus ? "minus" : "plus";
  man["options"] = {{"rmax", opt.r_max},           {"delta_rel", opt.delta_rel},       {"cells", opt.cells},
                    {"threshold", opt.threshold},   {"max_newton", opt.max_newton},     {"tau", opt.tau},
                    {"max_bisections", opt.max_bisections}};
  man["n"] = d.n;
  man["beta"] = d.beta;
  man["q"] = d.q;
  if (res.horizon) man["horizon"] = *res.horizon;
  else man["horizon"] = nullptr;
  man["C"] = res.C;
  man["Lambda"] = res.Lambda;
  Json fam = Json::array();
  for (size_t i = 0; i < res.family.size(); ++i) {
    const auto& s = res.family[i];
    char name[48];
    std::snprintf(name, sizeof name, "profile_%02zu.csv", i);
    char cells[48];
    std::snprintf(cells, sizeof cells, "cells_%02zu.csv", i);
    io::CsvWriter w(at(name), {"r", "u_t", "du_t", "theta_plus", "theta_minus"});
    for (size_t j = 0; j < s.r.size(); ++j) {
      auto e = expansion_scalars(d, s.r[j]);
      w.row(s.r[j], s.u[j], s.du[j], e.plus, e.minus);
    }
    io::CsvWriter c(at(cells), {"r_mid", "w"});
    for (size_t j = 0; j < s.mid.size(); ++j) c.row(s.mid[j], s.flux_w[j]);
    fam.push_back({{"t", s.t},
                   {"profile", name},
                   {"cells", cells},
                   {"blowup_radius", s.blowup_radius},
                   {"barrier_excess", s.barrier_excess},
                   {"residual", s.residual},
                   {"newton_iterations", s.newton_iterations}});
  }
  man["family"] = fam;
  man["limit_radius"] = res.limit_radius();
  write_json(at("manifest.json"), man);
}

struct StoredRadial {
  RadialInitialData data;
  BlowupResult result;
};

inline StoredRadial load_radial_run(const std::string& dir) {
  namespace fs = std::filesystem;
  auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
  Json man = read_json(at("manifest.json"));
  if (man.value("schema", "") != "jss-run/1" || man.value("kind", "") != "jang-radial")
    throw ParseError(dir + ": not a radial Jang run directory", 1, 1);
  StoredRadial s{io::parse_radial(io::read_file(at("radial.jss"))), {}};
  s.result.sign = man.at("sign") == "minus" ? BlowupSign::minus : BlowupSign::plus;
  if (!man.at("horizon").is_null()) s.result.horizon = man.at("horizon").get<double>();
  s.result.C = man.at("C").get<double>();
  s.result.Lambda = man.at("Lambda").get<double>();
  s.result.n = s.data.n;
  for (const auto& f : man.at("family")) {
    RadialSolution sol;
    sol.t = f.at("t").get<double>();
    sol.blowup_radius = f.at("blowup_radius").get<double>();
    sol.barrier_excess = f.at("barrier_excess").get<double>();
    sol.residual = f.at("residual").get<double>();
    sol.newton_iterations = f.at("newton_iterations").get<int>();
    auto P = io::read_csv(at(f.at("profile").get<std::string>()));
    sol.r = P.numbers("r");
    sol.u = P.numbers("u_t");
    sol.du = P.numbers("du_t");
    auto Cc = io::read_csv(at(f.at("cells").get<std::string>()));
    sol.mid = Cc.numbers("r_mid");
    sol.flux_w = Cc.numbers("w");
    s.result.family.push_back(std::move(sol));
  }
  return s;
}

}  // namespace jss
