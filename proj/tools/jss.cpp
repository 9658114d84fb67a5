// jss: command-line front door.
// Exit codes: 0 success or verdict true, 2 verdict false, 1 usage or parse error, 3 numeric failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "jss/mots/stability.hpp"
#include "jss/pipeline/runs.hpp"

using namespace jss;

namespace {

constexpr int kOk = 0, kUsage = 1, kFalse = 2, kNumeric = 3;

// JSS_THREADS caps parallelism; results do not depend on it.
int thread_budget() {
  const char* env = std::getenv("JSS_THREADS");
  int all = std::max(1u, std::thread::hardware_concurrency());
  if (!env || !*env) return all;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw CLI::ValidationError("JSS_THREADS", "must be a positive integer");
  return static_cast<int>(std::min<long>(v, all));
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !std::isfinite(v))
      throw CLI::ValidationError(what, "bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

void print_flux(const FluxReport& rep) {
  std::cout << "total flux: plus length " << io::fmt(rep.total_flux.lhs) << ", H0 area + minus length "
            << io::fmt(rep.total_flux.rhs) << (rep.total_flux.passes ? " (balanced)" : " (unbalanced)") << '\n';
  int failed = 0;
  for (const auto& p : rep.per_polygon) failed += !p.passes;
  std::cout << "polygons: " << rep.polygons << ", strict inequalities failing: " << failed << '\n';
  for (const auto& n : rep.notes) std::cout << "note: " << n << '\n';
  if (rep.unpruned_verdict) std::cout << "unpruned verdict: " << (*rep.unpruned_verdict ? "pass" : "fail") << '\n';
  std::cout << "verdict: " << (rep.verdict ? "pass" : "fail") << '\n';
}

struct Args {
  std::string input, input_b, out;
  // check-flux / solve-scherk
  bool stable_only = false, force = false;
  int max_corners = 12;
  ScherkOptions scherk;
  std::string k_schedule = "1,4,16,64";
  // solve-jang-radial
  std::string sign = "minus", t_schedule = "1e-1,1e-2,1e-3,1e-4";
  BlowupOptions blowup;
  // stability
  double tau_pos = 1e-8, scale = 1.0;
  int max_iter = 500;
  // horizon-area
  double p = 0.0, rel_tol = 1e-3;
  int levels = 4;
  // verify-uniqueness
  double margin = 0.2;
};

int cmd_check_flux(const Args& a) {
  std::string text = io::read_file(a.input);
  auto in = io::parse_domain(text);
  EnumConfig cfg = in.enum_config();
  cfg.max_corners = a.max_corners;
  cfg.stable_only = a.stable_only;
  auto rep = verify_jss(in.domain, cfg);
  print_flux(rep);
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    write_flux_ledger((std::filesystem::path(a.out) / "flux_ledger.csv").string(), rep);
    Json j = flux_json(rep);
    j["input_hash"] = io::content_hash(text);
    write_json((std::filesystem::path(a.out) / "flux_report.json").string(), j);
  }
  return rep.verdict ? kOk : kFalse;
}

int cmd_solve_scherk(Args a, int threads) {
  std::string text = io::read_file(a.input);
  auto in = io::parse_domain(text);
  a.scherk.ks = parse_list(a.k_schedule, "--k-schedule");
  for (size_t i = 0; i < a.scherk.ks.size(); ++i)
    if (!(a.scherk.ks[i] > 0) || (i > 0 && !(a.scherk.ks[i] > a.scherk.ks[i - 1])))
      throw CLI::ValidationError("--k-schedule", "must be positive and increasing");
  a.scherk.max_corners = a.max_corners;
  a.scherk.stable_only = a.stable_only;
  a.scherk.force = a.force;
  ScherkRun run;
  try {
    run = run_scherk_pipeline(in, a.scherk);
  } catch (const SolveFailure& e) {
    std::cerr << e.what() << " (last residual " << io::fmt(e.residual) << ")\n";
    return kNumeric;
  }
  write_scherk_run(a.out, text, run, a.scherk);
  write_timings(a.out, run.timings, threads);
  print_flux(run.flux);
  if (!run.solved()) {
    std::cout << "flux conditions fail; not solved (use --force to solve anyway)\n";
    return kFalse;
  }
  for (const auto& r : run.runs)
    std::cout << "k " << io::fmt(r.k) << ": newton " << r.newton.iterations << ", residual "
              << io::fmt(r.final_residual) << '\n';
  std::cout << "dispatch: " << verdict_name(run.limit->dispatch.verdict) << '\n';
  if (!run.limit->dispatch.note.empty()) std::cout << "note: " << run.limit->dispatch.note << '\n';
  return run.success() ? kOk : kFalse;
}

int cmd_solve_jang_radial(Args a) {
  std::string text = io::read_file(a.input);
  auto d = io::parse_radial(text);
  if (a.sign != "minus" && a.sign != "plus") throw CLI::ValidationError("--sign", "must be minus or plus");
  auto sign = a.sign == "minus" ? BlowupSign::minus : BlowupSign::plus;
  auto ts = parse_list(a.t_schedule, "--t-schedule");
  for (size_t i = 0; i < ts.size(); ++i)
    if (!(ts[i] > 0) || (i > 0 && !(ts[i] < ts[i - 1])))
      throw CLI::ValidationError("--t-schedule", "must be positive and decreasing");
  auto res = solve_blowup(d, sign, ts, a.blowup);
  write_radial_run(a.out, text, d, res, a.blowup);
  if (res.horizon) std::cout << "horizon: " << io::fmt(*res.horizon) << '\n';
  else std::cout << "horizon: none\n";
  std::cout << "Lambda: " << io::fmt(res.Lambda) << ", C: " << io::fmt(res.C) << '\n';
  bool sandwich = true;
  for (const auto& s : res.family) {
    std::cout << "t " << io::fmt(s.t) << ": blow-up radius " << io::fmt(s.blowup_radius) << ", barrier excess "
              << io::fmt(s.barrier_excess) << '\n';
    sandwich = sandwich && s.barrier_excess <= 0;
  }
  std::cout << "barrier sandwich: " << (sandwich ? "holds" : "violated") << '\n';
  return sandwich ? kOk : kFalse;
}

int cmd_stability(const Args& a) {
  auto c = io::parse_mots_coeffs(io::read_file(a.input));
  auto ev = principal_eigenvalue(assemble_stability_operator(c), a.tau_pos, a.max_iter);
  double tau = 1e-6 * a.scale;
  bool stable = ev.lambda >= -tau;
  std::cout << "lambda: " << io::fmt(ev.lambda) << '\n'
            << "margin: " << io::fmt(ev.lambda) << " (tau " << io::fmt(tau) << ")" << '\n'
            << "iterations: " << ev.iterations << '\n'
            << "stable: " << (stable ? "yes" : "no") << '\n';
  if (!a.out.empty()) {
    io::CsvWriter w(a.out, {"node", "x", "y", "phi"});
    const auto& m = c.mesh;
    for (int i = 0; i < m.size(); ++i) {
      int ix = i % m.nx, iy = i / m.nx;
      w.row(i, ix * m.hx(), m.kind == SigmaMesh::Kind::patch ? iy * m.hy() : 0.0, ev.eigenfunction[i]);
    }
  }
  return stable ? kOk : kFalse;
}

int cmd_verify(const Args& a) {
  auto A = load_scherk_field(a.input), B = load_scherk_field(a.input_b);
  auto rep = compare_runs(A, B, a.margin);
  std::cout << "defect: " << io::fmt(rep.defect) << '\n'
            << "area: " << io::fmt(rep.area) << '\n'
            << "max gradient: " << io::fmt(rep.max_gradient) << '\n'
            << "tau: " << io::fmt(rep.tau) << '\n'
            << "certified: " << (rep.certified() ? "yes" : "no") << '\n';
  if (!a.out.empty()) {
    io::CsvWriter w(a.out, {"defect", "area", "max_gradient", "tau", "certified"});
    w.row(rep.defect, rep.area, rep.max_gradient, rep.tau, rep.certified());
  }
  return rep.certified() ? kOk : kFalse;
}

int cmd_horizon_area(const Args& a) {
  auto s = load_radial_run(a.input);
  auto h = horizon_area_flux(s.result, s.data, a.p, a.levels, a.rel_tol);
  std::cout << "flux: " << io::fmt(h.estimate) << '\n'
            << "finite radius flux: " << io::fmt(h.finite_radius_flux) << " at r = " << io::fmt(h.radii.front())
            << '\n';
  if (!a.out.empty()) {
    io::CsvWriter w(a.out, {"r", "flux", "richardson"});
    for (size_t i = 0; i < h.radii.size(); ++i)
      w.row(h.radii[i], h.fluxes[i], i < h.richardson.size() ? h.richardson[i] : std::nan(""));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scherk-type graphs, flux conditions and the radial Jang equation"};
  app.require_subcommand(1);
  Args a;

  auto* flux = app.add_subcommand("check-flux", "decide the flux conditions for a domain file");
  flux->add_option("domain-file", a.input)->required();
  flux->add_flag("--stable-only", a.stable_only, "enumerate only polygons with stable interior arcs");
  flux->add_option("--max-corners", a.max_corners, "largest number of corners per polygon")->capture_default_str();
  flux->add_option("--out", a.out, "directory for the ledger CSV and report");

  auto* scherk = app.add_subcommand("solve-scherk", "flux check, regularized solves, limit classification");
  scherk->set_help_flag("--help", "print this help message and exit");  // -h would clash with --h
  scherk->add_option("domain-file", a.input)->required();
  scherk->add_option("--eps", a.scherk.eps, "crescent width")->capture_default_str();
  scherk->add_option("--h", a.scherk.h, "mesh size")->capture_default_str();
  scherk->add_option("--grade", a.scherk.grade, "side refinement of rectangle meshes")->capture_default_str();
  scherk->add_option("--k-schedule", a.k_schedule, "increasing k values")->capture_default_str();
  scherk->add_option("--C", a.scherk.C, "crescent data constant, 0 for the default")->capture_default_str();
  scherk->add_option("--tau-newton", a.scherk.newton.tol, "Newton residual target")->capture_default_str();
  scherk->add_option("--max-iter", a.scherk.newton.max_iter, "Newton iteration cap")->capture_default_str();
  scherk->add_option("--max-corners", a.max_corners, "largest number of corners per polygon")->capture_default_str();
  scherk->add_flag("--stable-only", a.stable_only, "enumerate only polygons with stable interior arcs");
  scherk->add_flag("--force", a.force, "solve even when the flux conditions fail");
  scherk->add_option("--out", a.out, "run directory")->required();

  auto* radial = app.add_subcommand("solve-jang-radial", "regularized radial Jang family");
  radial->add_option("file", a.input)->required();
  radial->add_option("--sign", a.sign, "minus or plus")->capture_default_str();
  radial->add_option("--t-schedule", a.t_schedule, "decreasing t values")->capture_default_str();
  radial->add_option("--rmax", a.blowup.r_max, "outer radius")->capture_default_str();
  radial->add_option("--cells", a.blowup.cells, "radial cells")->capture_default_str();
  radial->add_option("--lambda", a.blowup.Lambda, "barrier scale, 0 to search")->capture_default_str();
  radial->add_option("--C", a.blowup.C, "inner data constant, 0 for the default")->capture_default_str();
  radial->add_option("--threshold", a.blowup.threshold, "blow-up threshold times sqrt(t)")->capture_default_str();
  radial->add_option("--out", a.out, "run directory")->required();

  auto* stab = app.add_subcommand("stability", "principal eigenvalue of the MOTS stability operator");
  stab->add_option("file", a.input)->required();
  stab->add_option("--tau-pos", a.tau_pos, "positivity slack of the eigenfunction")->capture_default_str();
  stab->add_option("--max-iter", a.max_iter, "inverse iteration cap")->capture_default_str();
  stab->add_option("--scale", a.scale, "operator scale for the stability margin")->capture_default_str();
  stab->add_option("--out", a.out, "eigenfunction CSV");

  auto* verify = app.add_subcommand("verify-uniqueness", "uniqueness defect between two Scherk runs");
  verify->add_option("runA", a.input)->required();
  verify->add_option("runB", a.input_b)->required();
  verify->add_option("--margin", a.margin, "distance kept from the boundary")->capture_default_str();
  verify->add_option("--out", a.out, "defect CSV");

  auto* horizon = app.add_subcommand("horizon-area", "extrapolated sphere flux of a radial run");
  horizon->add_option("radial-run", a.input)->required();
  horizon->add_option("--p", a.p, "tail exponent, 0 for the metric decay rate")->capture_default_str();
  horizon->add_option("--levels", a.levels, "radii in the Richardson ladder")->capture_default_str();
  horizon->add_option("--rel-tol", a.rel_tol, "settling tolerance of the ladder")->capture_default_str();
  horizon->add_option("--out", a.out, "ladder CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    int threads = thread_budget();
    if (*flux) return cmd_check_flux(a);
    if (*scherk) return cmd_solve_scherk(a, threads);
    if (*radial) return cmd_solve_jang_radial(a);
    if (*stab) return cmd_stability(a);
    if (*verify) return cmd_verify(a);
    if (*horizon) return cmd_horizon_area(a);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SolveFailure& e) {
    std::cerr << "error: " << e.what() << " (last residual " << io::fmt(e.residual) << ")\n";
    return kNumeric;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidDomain& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const MeshTopology& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    // Quadrature, eigen, extrapolation and classification failures.
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}
