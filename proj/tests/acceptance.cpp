// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "riccilab/cli.hpp"
#include "riccilab/errors.hpp"
#include "riccilab/riemann.hpp"

using namespace riccilab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void line(int n, bool ok, const std::string& what, const std::string& measured) {
  std::printf("%s criterion %2d: %s [%s]\n", ok ? "PASS" : "FAIL", n, what.c_str(), measured.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const CheckReport* find(const SuiteResult& res, const std::string& id, const std::string& provider) {
  for (const CheckReport& r : res.reports)
    if (r.id == id && r.provider == provider) return &r;
  return nullptr;
}

bool is_grid(const CheckReport& r) { return r.provider == "grid"; }

void curvature_oracles() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  CounterRng rng(1, "acceptance_curvature");
  auto at = [](const ProviderPtr& p, ChartPoint pt) {
    const MetricJet jet = eval_metric_jet(*p, pt, 2);
    return std::make_pair(jet, curvature(jet, christoffel(jet)));
  };
  const ProviderPtr s2 = make_round_sphere(2, 1.0), s3 = make_round_sphere(3, 1.0), cigar = make_cigar();
  for (int k = 0; k < 10; ++k) {
    ChartPoint pt = s2->sample_point(rng);
    pt.time = 0.0;
    const auto [jet, curv] = at(s2, pt);
    worst = std::max(worst, std::abs(curv.scalar.value() - 2.0));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(curv.ricci(i, j).value() - jet.value(i, j)));
    ChartPoint pt3 = s3->sample_point(rng);
    pt3.time = 0.0;
    worst = std::max(worst, std::abs(at(s3, pt3).second.scalar.value() - 6.0));
  }
  worst = std::max(worst, std::abs(at(cigar, ChartPoint{{0.0, 0.0}, 0.0}).second.scalar.value() - 4.0));
  const double elapsed = seconds_since(t0);
  line(1, worst <= 1e-8 && elapsed < 1.0, "closed-form curvature on sphere2, sphere3 and the cigar origin",
       fmt("max error %.2e", worst) + fmt(", %.3f s", elapsed));
}

void ricci_solves_linearized_flow() {
  double worst = 0.0;
  CounterRng rng(1, "acceptance_lichnerowicz");
  for (int n : {2, 3}) {
    const ProviderPtr p = make_round_sphere(n, 1.0);
    for (int k = 0; k < 50; ++k) {
      const ChartPoint pt = p->sample_point(rng);
      const MetricJet jet = eval_metric_jet(*p, pt, 4);
      const SpatialConnection conn = christoffel(jet);
      const CurvaturePack curv = curvature(jet, conn);
      const CotensorJet h = eval_h_jet(*p, HFamily::Ricci, pt, 4);
      const TensorJ rhs = lichnerowicz(jet, conn, curv, h);
      const int tv = jet.space().time_var();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(h(i, j).d(tv).value() - rhs(i, j).value()));
    }
  }
  line(2, worst <= 1e-7, "h = Rc solves the linearized flow on both shrinking spheres (50 points each)",
       fmt("max residual %.2e", worst));
}

void identity_suite(const SuiteResult& res, double elapsed) {
  const std::set<std::string> ids{
      "lemma_2_1_i", "lemma_2_1_ii", "lemma_2_2", "prop_2_3_eq_2_4", "prop_2_3_eq_2_5", "compat", "curvext_B4",
      "curvext_B5", "lemma_3_2_eq_3_5", "lemma_3_2_eq_3_6", "theorem_3_1_eq_3_3", "theorem_3_1_eq_3_4",
      "theorem_C", "eq_4_3", "eq_4_4", "eq_4_5", "eq_5_2", "eq_5_6", "harnack_specialization"};
  int analytic = 0, grid = 0, bad = 0;
  double worst_analytic = 0.0, worst_grid_ratio = 0.0;
  for (const CheckReport& r : res.reports) {
    if (!ids.count(r.id)) continue;
    if (is_grid(r)) {
      ++grid;
      if (!r.pass || r.rule != ToleranceRule::StencilScaled) ++bad;
      worst_grid_ratio = std::max(worst_grid_ratio, r.max_residual / r.tolerance);
    } else {
      ++analytic;
      if (!r.pass || r.max_residual > 1e-6 || r.tolerance > 1e-6) ++bad;
      worst_analytic = std::max(worst_analytic, r.max_residual);
    }
  }
  const bool every_id = [&] {
    for (const std::string& id : ids)
      if (!find(res, id, "grid") && check_info(id).kind != CheckKind::Special) return false;
    return true;
  }();
  line(3, bad == 0 && every_id && analytic > 0 && elapsed <= 600.0 && res.summary.pass(),
       "identity suite on analytic providers and the 32x32 grid, whole catalog within 10 min",
       std::to_string(analytic) + " analytic runs max " + fmt("%.2e", worst_analytic) + ", " + std::to_string(grid) +
           " grid runs max residual/tol " + fmt("%.2e", worst_grid_ratio) + fmt(", suite %.1f s", elapsed) + ", " +
           std::to_string(res.summary.passed) + "/" + std::to_string(res.summary.total) + " reports pass");
}

void arbitrary_v(const SuiteResult& res) {
  int fields = 0;
  bool ok = true;
  double worst = 0.0;
  for (const CheckReport& r : res.reports) {
    if (r.id != "theorem_3_1_eq_3_4" || r.provider.rfind("pulled_", 0) != 0) continue;
    ++fields;
    ok = ok && r.pass && r.detail("curl_V") > 1e-3;
    for (int k = 0; k < 3; ++k) {
      const double v = r.detail("time_scalar_" + std::to_string(k));
      ok = ok && v <= r.tolerance;
      worst = std::max(worst, v);
    }
  }
  line(4, ok && fields >= 5, "connection evolution for non-gradient V fields and 3 time scalars",
       std::to_string(fields) + " V fields, max residual " + fmt("%.2e", worst));
}

void s_convergence(const SuiteResult& res) {
  bool ok = true;
  std::string measured;
  for (const std::string id :
       {"lemma_4_1_ii", "theorem_4_2_metric", "theorem_4_2_connection", "theorem_5_1", "lemma_6_3", "lemma_6_4"}) {
    const CheckReport* r = find(res, id, "grid");
    const double order = r ? r->detail("s_order") : NAN;
    ok = ok && r && r->pass && order >= 1.7;
    measured += id + fmt(" %.2f ", order);
  }
  line(5, ok, "s-convergence order of the two-parameter family on the 32x32 grid", measured);
}

void ghat_tables(const SuiteResult& res) {
  int configs = 0;
  bool ok = true;
  double worst = 0.0;
  for (const CheckReport& r : res.reports) {
    if (r.id != "lemma_6_1" || is_grid(r)) continue;
    configs += r.n_points;
    ok = ok && r.pass && r.tolerance <= 1e-9;
    worst = std::max(worst, r.max_residual);
  }
  line(6, ok && configs >= 100, "closed and generic Christoffel tables of the approximating metric agree",
       std::to_string(configs) + " configurations over 3 f-choices, max " + fmt("%.2e", worst));
}

void n_slopes(const SuiteResult& res) {
  bool ok = true;
  std::string measured;
  for (const std::string p : {"sphere2", "cigar"}) {
    const CheckReport* r = find(res, "lemma_6_2_slopes", p);
    ok = ok && r && r->pass;
    if (!r) continue;
    measured += p + ":";
    for (const char* q : {"slope_ginv", "slope_gamma", "slope_riem"}) {
      const double s = r->detail(q);
      ok = ok && s >= -1.1 && s <= -0.9;
      measured += fmt(" %.3f", s);
    }
    measured += " ";
  }
  line(7, ok, "residual slopes against N on sphere and cigar", measured);
}

void harnack(const SuiteResult& res) {
  bool ok = true;
  double zmin = INFINITY, tr_err = 0.0;
  int frames = 0;
  for (const std::string p : {"sphere2", "sphere3"}) {
    const CheckReport* r = find(res, "harnack_positivity_sphere", p);
    ok = ok && r && r->pass;
    if (!r) continue;
    ok = ok && r->detail("tR_increasing") == 1.0 && r->detail("tR_error") <= 1e-10 && r->detail("z_min") >= -1e-9;
    zmin = std::min(zmin, r->detail("z_min"));
    tr_err = std::max(tr_err, r->detail("tR_error"));
    frames += r->n_points;
  }
  line(8, ok, "Harnack positivity and tR monotonicity on the shrinking spheres",
       fmt("min Z %.2e", zmin) + fmt(", tR error %.2e, ", tr_err) + std::to_string(frames) + " frames");
}

void mutations(const GridSetup& setup) {
  const std::vector<std::string> targeted{"lemma_2_2",          "prop_2_3_eq_2_4",    "prop_2_3_eq_2_5",
                                          "curvext_B4",         "theorem_3_1_eq_3_4", "lemma_3_2_eq_3_6",
                                          "theorem_C",          "lemma_6_3"};
  bool ok = true;
  std::string measured;
  for (mutation::Kind kind : {mutation::Kind::FlipCurvatureSign, mutation::Kind::DropGamma00Gradient,
                              mutation::Kind::DropGamma00Speed, mutation::Kind::DropGamma00Drift,
                              mutation::Kind::DropRcDotH}) {
    Context ctx(setup);
    SuiteRequest req;
    req.ids = kind == mutation::Kind::FlipCurvatureSign ? catalog_ids() : targeted;
    req.mutation = kind;
    const SuiteResult res = run_suite(req, ctx);
    std::set<std::string> failed;
    for (const CheckReport& r : res.reports)
      if (!r.pass) failed.insert(r.id);
    const std::size_t need = kind == mutation::Kind::FlipCurvatureSign ? 5 : 1;
    ok = ok && failed.size() >= need;
    measured += mutation::name(kind) + " " + std::to_string(failed.size()) + " ";
  }
  line(9, ok, "each injected fault fails named checks", measured + "checks failed");
}

}  // namespace

int main() {
  try {
    curvature_oracles();
    ricci_solves_linearized_flow();

    const RunConfig config;  // full catalog, default providers, 32x32 grid
    Context ctx(config.grid);
    const auto t0 = Clock::now();
    const SuiteResult suite = run_suite(suite_request(config), ctx);
    const double elapsed = seconds_since(t0);
    identity_suite(suite, elapsed);
    arbitrary_v(suite);
    s_convergence(suite);
    ghat_tables(suite);
    n_slopes(suite);
    harnack(suite);
    mutations(config.grid);

    Context again(config.grid);
    RunConfig serial = config;
    serial.threads = 1;
    const std::string first = reports_json(suite);
    const bool same = first == reports_json(run_suite(suite_request(serial), again));
    line(10, same, "identical config and seed give identical JSON reports",
         std::to_string(first.size()) + " bytes compared");
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
