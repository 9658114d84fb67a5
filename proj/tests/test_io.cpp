#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "jss/pipeline/runs.hpp"

using namespace jss;
using namespace jss::fixtures;

namespace {

std::string data(const std::string& f) { return io::read_file(std::string(JSS_DATA_DIR) + "/" + f); }

std::string tmpdir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("jss_io_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

// Line and column of the ParseError thrown by f.
template <class F>
std::pair<int, int> where(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return {e.line, e.column};
  }
  ADD_FAILURE() << "no ParseError";
  return {0, 0};
}

const char* kSquare =
    "jss-domain/1\n"
    "metric flat\n"
    "H0 0\n"
    "corner 0 0\ncorner 1 0\ncorner 1 1\ncorner 0 1\n"
    "arc 0 1 plus line\narc 1 2 minus line\narc 2 3 plus line\narc 3 0 minus line\n";

}  // namespace

TEST(DomainFile, ScherkMatchesFixture) {
  auto f = io::parse_domain(data("scherk.jss"));
  auto ref = scherk();
  ASSERT_EQ(f.domain.corners().size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(f.domain.corners()[i], ref.corners()[i]);
  EXPECT_EQ(f.domain.boundary_length(Tag::plus), ref.boundary_length(Tag::plus));
  EXPECT_EQ(f.domain.boundary_length(Tag::minus), ref.boundary_length(Tag::minus));
  EXPECT_TRUE(verify_jss(f.domain, f.enum_config()).verdict);
  auto r = io::parse_domain(data("rectangle.jss"));
  auto rep = verify_jss(r.domain, r.enum_config());
  EXPECT_FALSE(rep.verdict);
  EXPECT_NEAR(rep.total_flux.lhs - rep.total_flux.rhs, 0.1 * 2 * pi, 1e-12);
}

TEST(DomainFile, LuneMatchesFixtureAndAutoArcs) {
  auto f = io::parse_domain(data("lune.jss"));
  auto ref = lune();
  EXPECT_NEAR(f.domain.boundary_length(Tag::plus), 5 * pi / 3, 1e-9);
  EXPECT_NEAR(f.domain.boundary_length(Tag::minus), pi / 3, 1e-9);
  EXPECT_NEAR(f.domain.total_area(), ref.total_area(), 1e-9);
  // Branch 0 of the constant curvature shooter is the minor arc bending down.
  std::string text =
      "jss-domain/1\nmetric flat\nH0 1\ncorner 0 0\ncorner 1 0\n"
      "arc 0 1 plus expr 0.5 + cos(2*pi/3 + 5*pi/3*t) ; -sqrt(3)/2 + sin(2*pi/3 + 5*pi/3*t)\n"
      "arc 0 1 minus auto 0\n";
  auto g = io::parse_domain(text);
  EXPECT_NEAR(g.domain.boundary_length(Tag::minus), pi / 3, 1e-8);
  EXPECT_NEAR(g.domain.total_area(), ref.total_area(), 1e-8);
}

TEST(DomainFile, ChartMetricAndConstants) {
  std::string chart = kSquare;
  chart.replace(chart.find("metric flat"), 11, "metric chart\ng11 1 + 0*x\ng12 0\ng22 1");
  auto a = io::parse_domain(kSquare), b = io::parse_domain(chart);
  EXPECT_EQ(b.domain.metric().kind(), MetricField::Kind::chart);
  EXPECT_NEAR(a.domain.total_area(), 1.0, 1e-12);
  EXPECT_NEAR(b.domain.total_area(), 1.0, 1e-10);
  EXPECT_NEAR(b.domain.boundary_length(Tag::plus), 2.0, 1e-10);
  std::string scaled = "jss-domain/1\nmetric chart\ng11 4\ng12 0\ng22 4\nH0 0\n"
                       "corner 0 0\ncorner 1 0\ncorner 1 1\ncorner 0 1\n"
                       "arc 0 1 plus line\narc 1 2 minus line\narc 2 3 plus line\narc 3 0 minus line\n";
  EXPECT_NEAR(io::parse_domain(scaled).domain.total_area(), 4.0, 1e-10);
  // Comments, blank lines and constant expressions.
  std::string c = "# leading comment\n\njss-domain/1  # tag\nmetric flat\nH0 0\n"
                  "corner -pi/2 0\ncorner 2^2 0\ncorner 2^2 1\ncorner -pi/2 1\n"
                  "arc 0 1 plus line\narc 1 2 minus line\narc 2 3 plus line\narc 3 0 minus line\n";
  EXPECT_EQ(io::parse_domain(c).domain.corners()[1], Vec2(4, 0));
  EXPECT_EQ(io::parse_domain(c).domain.corners()[0].x(), -pi / 2);
}

TEST(DomainFile, DiagnosticsCarryLineAndColumn) {
  std::string s = kSquare;
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s).replace(s.find("plus"), 4, "plux")); }),
            std::make_pair(8, 9));
  EXPECT_EQ(where([] { io::parse_domain("jss-domain/2\n"); }), std::make_pair(1, 1));
  EXPECT_EQ(where([] { io::parse_domain(""); }), std::make_pair(1, 1));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "metric flat\n"); }), std::make_pair(12, 1));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "bogus 1\n"); }), std::make_pair(12, 1));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "corner 1 2+*3\n"); }), std::make_pair(12, 12));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "arc 0 7 plus line\n"); }), std::make_pair(12, 7));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "arc 0 1 plus expr t ; q\n"); }), std::make_pair(12, 23));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "arc 0 1 plus expr t\n"); }), std::make_pair(12, 19));
  EXPECT_EQ(where([&] { io::parse_domain(std::string(s) + "corner x 1\n"); }), std::make_pair(12, 8));
  std::string no_h = s;
  no_h.erase(no_h.find("H0 0\n"), 5);
  EXPECT_EQ(where([&] { io::parse_domain(no_h); }).first, 11);
  std::string chart = s;
  chart.replace(chart.find("metric flat"), 11, "metric chart\ng11 1\ng12 0");
  EXPECT_EQ(where([&] { io::parse_domain(chart); }), std::make_pair(2, 8));
  // Geometric failures surface as parse errors too.
  std::string open = "jss-domain/1\nmetric flat\nH0 0\ncorner 0 0\ncorner 1 0\narc 0 1 plus line\n";
  EXPECT_THROW(io::parse_domain(open), ParseError);
}

TEST(RadialFile, SchwarzschildMatchesBuiltIn) {
  auto d = io::parse_radial(data("schwarzschild.jss"));
  auto ref = radial_data::schwarzschild();
  EXPECT_EQ(d.n, ref.n);
  EXPECT_EQ(d.q, ref.q);
  EXPECT_EQ(d.beta, ref.beta);
  EXPECT_EQ(d.r_min, ref.r_min);
  for (double r : {2.5, 3.0, 10.0, 1e3}) {
    EXPECT_NEAR(d.phi_sq(r), ref.phi_sq(r), 1e-15 * ref.phi_sq(r));
    EXPECT_EQ(d.trace_k(r), 0.0);
  }
  EXPECT_NEAR(*outermost_mots_radius(d), 2.0, 1e-9);
  EXPECT_EQ(where([] { io::parse_radial("jang-radial/1\nphi2 1\n"); }).first, 3);
  EXPECT_EQ(where([] { io::parse_radial("jang-radial/1\nn 3\nphi2 1/(1-2/r\n"); }), std::make_pair(3, 14));
  EXPECT_EQ(where([] { io::parse_radial("jang-radial/1\nn three\nphi2 1\n"); }), std::make_pair(2, 3));
}

TEST(CoefficientFile, FieldsAndValues) {
  auto c = io::parse_mots_coeffs(data("interval.jss"));
  EXPECT_EQ(c.mesh.kind, SigmaMesh::Kind::interval);
  EXPECT_EQ(c.mesh.size(), 1000);
  auto d = io::parse_mots_coeffs(data("interval_drift.jss"));
  for (const auto& x : d.X) EXPECT_EQ(x, Vec2(1, 0));
  auto e = io::parse_mots_coeffs("mots-coeffs/1\nmesh interval 2 5\nfield potential x^2\nvalues mu 1 2 3 4 5\n");
  for (int i = 0; i < 5; ++i) {
    double x = 0.5 * i;
    EXPECT_DOUBLE_EQ(e.potential(i), x * x - (i + 1));
  }
  auto p = io::parse_mots_coeffs("mots-coeffs/1\nmesh patch 1 2 3 5\nfield J_nu x + 10*y\n");
  EXPECT_EQ(p.mesh.size(), 15);
  EXPECT_DOUBLE_EQ(p.J_nu[3 * 4 + 2], 1.0 + 10 * 2.0);
  EXPECT_EQ(where([] { io::parse_mots_coeffs("mots-coeffs/1\nmesh interval 1 4\nvalues mu 1 2 3\n"); }),
            std::make_pair(3, 16));
  EXPECT_EQ(where([] { io::parse_mots_coeffs("mots-coeffs/1\nmesh interval 1 4\nfield nu 1\n"); }),
            std::make_pair(3, 7));
  EXPECT_EQ(where([] { io::parse_mots_coeffs("mots-coeffs/1\nfield mu 1\n"); }), std::make_pair(2, 1));
  EXPECT_EQ(where([] { io::parse_mots_coeffs("mots-coeffs/1\nmesh torus 1 4\n"); }), std::make_pair(2, 6));
}

TEST(Output, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  for (int i = 0; i < 100000; ++i) {
    std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    ++checked;
    std::string s = io::fmt(v);
    ASSERT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
  EXPECT_GT(checked, 99000);
  EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(io::fmt(2.0), "2");
}

TEST(Output, CsvRoundTrip) {
  auto dir = tmpdir("csv");
  std::filesystem::create_directories(dir);
  std::string path = dir + "/t.csv";
  {
    io::CsvWriter w(path, {"a", "b", "c"});
    w.row(1, pi, "x");
    w.row(-2, 1e-300, "y");
  }
  auto t = io::read_csv(path);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(t.numbers("b"), (std::vector<double>{pi, 1e-300}));
  EXPECT_EQ(t.rows[1][2], "y");
  EXPECT_THROW(t.numbers("c"), ParseError);
  EXPECT_THROW(t.column("d"), ParseError);
}

TEST(Runs, RadialRunRoundTripsExactly) {
  auto d = io::parse_radial(data("schwarzschild.jss"));
  BlowupOptions opt;
  std::vector<double> ts;
  for (int k = 1; k <= 10; ++k) ts.push_back(std::pow(10.0, -k));
  auto res = solve_blowup(d, BlowupSign::minus, ts, opt);
  auto dir = tmpdir("radial");
  write_radial_run(dir, data("schwarzschild.jss"), d, res, opt);
  auto back = load_radial_run(dir);
  ASSERT_EQ(back.result.family.size(), res.family.size());
  for (size_t i = 0; i < res.family.size(); ++i) {
    EXPECT_EQ(back.result.family[i].t, res.family[i].t);
    EXPECT_EQ(back.result.family[i].u, res.family[i].u);
    EXPECT_EQ(back.result.family[i].flux_w, res.family[i].flux_w);
  }
  EXPECT_EQ(horizon_area_flux(back.result, back.data).estimate, horizon_area_flux(res, d).estimate);
  EXPECT_NEAR(horizon_area_flux(back.result, back.data).estimate, 16 * pi, 0.01 * 16 * pi);
}

TEST(Runs, ScherkRunRoundTripsExactly) {
  auto in = io::parse_domain(data("scherk.jss"));
  ScherkOptions opt;
  opt.h = 0.1;
  opt.grade = 4;
  auto run = run_scherk_pipeline(in, opt);
  ASSERT_TRUE(run.solved());
  EXPECT_EQ(run.limit->dispatch.verdict, Verdict::CaseC_solution);
  auto dir = tmpdir("scherk");
  write_scherk_run(dir, data("scherk.jss"), run, opt);
  auto s = load_scherk_field(dir);
  EXPECT_EQ(s.k, 64.0);
  EXPECT_EQ(s.u.values, run.runs.back().u);
  EXPECT_EQ(s.mesh->vertices, run.aux->mesh->vertices);
  EXPECT_EQ(compare_runs(s, s).defect, 0.0);
  auto cls = io::read_csv(dir + "/classification.csv");
  EXPECT_EQ(static_cast<int>(cls.rows.size()), run.aux->mesh->num_vertices());
  auto ledger = io::read_csv(dir + "/flux_ledger.csv");
  EXPECT_EQ(ledger.header, (std::vector<std::string>{"polygon_id", "condition", "lhs", "rhs", "margin", "passes"}));
  EXPECT_THROW(load_scherk_field(tmpdir("missing")), ParseError);
}
