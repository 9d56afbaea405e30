#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "riccilab/errors.hpp"
#include "riccilab/verify.hpp"

using namespace riccilab;

namespace {

GridSetup small_grid() {
  GridSetup s;
  s.resolution = 16;
  s.horizon = 0.05;
  return s;
}

CheckReport run(const std::string& id, const std::string& provider, Context& ctx, int samples = 0) {
  CheckSpec spec;
  spec.id = id;
  spec.provider = provider;
  spec.samples = samples;
  return run_check(spec, ctx);
}

}  // namespace

TEST_CASE("catalog ids are unique and resolvable") {
  std::set<std::string> seen;
  for (const CheckInfo& c : catalog()) {
    CHECK(seen.insert(c.id).second);
    CHECK(&check_info(c.id) == &c);
    CHECK_FALSE(c.citation.empty());
    CHECK_FALSE(default_providers(c).empty());
    for (const std::string& p : default_providers(c)) CHECK(applicable(c, p));
  }
  CHECK(seen.size() == 28);
  CHECK_THROWS_AS(check_info("lemma_9_9"), UnknownCheck);
}

TEST_CASE("extended h on the flat torus has zero residual") {
  Context ctx(small_grid());
  const CheckReport r = run("lemma_2_2", "flat", ctx);
  CHECK(r.error.empty());
  CHECK(r.pass);
  CHECK(r.max_residual == 0.0);
  CHECK(r.n_points > 0);
  CHECK(r.rule == ToleranceRule::Absolute);
}

TEST_CASE("run_check errors") {
  Context ctx(small_grid());
  CHECK_THROWS_AS(run("no_such_check", "flat", ctx), UnknownCheck);
  CHECK_THROWS_AS(run("compat", "torus7", ctx), ProviderUnavailable);
  // plain-flow identities need V = 0
  CHECK_THROWS_AS(run("lemma_2_2", "pulled_cigar", ctx), ProviderUnavailable);
  // the cigar has no scaling family
  CHECK_THROWS_AS(run("theorem_5_1", "cigar", ctx), ProviderUnavailable);
  CHECK_THROWS_AS(run("harnack_positivity_sphere", "cigar", ctx), ProviderUnavailable);
}

TEST_CASE("grid setup validation names the field") {
  GridSetup s;
  s.resolution = -4;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("grid.resolution"), ConfigInvalid);
  s = GridSetup{};
  s.accuracy = 3;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("grid.accuracy"), ConfigInvalid);
  s = GridSetup{};
  s.s0 = 0.0;
  CHECK_THROWS_WITH_AS(Context{s}, doctest::Contains("grid.s0"), ConfigInvalid);
}

TEST_CASE("tolerance budgets") {
  const GridSetup setup;
  for (const CheckInfo& c : catalog()) CHECK(tolerance_budget(c, "sphere2", setup) == c.analytic_tolerance);
  const CheckInfo& conn = check_info("theorem_4_2_connection");
  const double coarse = tolerance_budget(conn, "grid", setup);
  CHECK(coarse >= conn.analytic_tolerance);
  GridSetup fine = setup;
  fine.resolution = 64;
  CHECK(tolerance_budget(conn, "grid", fine) < coarse);
  GridSetup spectral = setup;
  spectral.accuracy = 0;
  CHECK(tolerance_budget(conn, "grid", spectral) < coarse);
}

TEST_CASE("analytic providers pass their identities") {
  Context ctx(small_grid());
  SuiteRequest req;
  req.ids = catalog_ids();
  req.providers = {"sphere2", "cigar", "pulled_s2xs1"};
  req.samples = 3;
  req.threads = 2;
  const SuiteResult res = run_suite(req, ctx);
  for (const CheckReport& r : res.reports) {
    INFO(r.id << " on " << r.provider << ": " << r.max_residual << " / " << r.tolerance << " " << r.error);
    CHECK(r.pass);
    CHECK(r.max_residual <= r.tolerance);
  }
  CHECK(res.summary.pass());
  CHECK(res.summary.total == static_cast<int>(res.reports.size()));
}

TEST_CASE("connection evolution holds for non-gradient V and several time components") {
  Context ctx(small_grid());
  for (const std::string p : {"pulled_flat", "pulled_sphere2", "pulled_sphere3", "pulled_cigar", "pulled_s2xs1"}) {
    const CheckReport r = run("theorem_3_1_eq_3_4", p, ctx, 5);
    INFO(p);
    CHECK(r.pass);
    CHECK(r.detail("curl_V") > 1e-3);
    for (int k = 0; k < 3; ++k) CHECK(r.detail("time_scalar_" + std::to_string(k)) <= r.tolerance);
  }
}

TEST_CASE("grid family converges at second order in s") {
  Context ctx(small_grid());
  for (const std::string id : {"lemma_4_1_ii", "theorem_4_2_connection", "theorem_5_1", "lemma_6_3", "lemma_6_4"}) {
    const CheckReport r = run(id, "grid", ctx, 2);
    INFO(id << " " << r.error);
    CHECK(r.pass);
    CHECK(r.rule == ToleranceRule::StencilScaled);
    CHECK(r.detail("s_order") > 1.7);
    CHECK(r.detail("s_order") < 2.3);
  }
}

TEST_CASE("suite bookkeeping") {
  Context ctx(small_grid());
  SuiteRequest empty;
  const SuiteResult none = run_suite(empty, ctx);
  CHECK(none.reports.empty());
  CHECK(none.summary.pass());

  SuiteRequest req;
  req.ids = {"lemma_2_2", "bogus", "theorem_5_1"};
  req.providers = {"pulled_cigar", "flat", "cigar"};
  req.samples = 2;
  const SuiteResult res = run_suite(req, ctx);
  // lemma_2_2 skips pulled_cigar; theorem_5_1 only runs on flat
  REQUIRE(res.reports.size() == 4);
  CHECK(res.reports[0].provider == "flat");
  CHECK(res.reports[1].provider == "cigar");
  CHECK(res.reports[2].id == "bogus");
  CHECK(res.reports[2].error.find("UnknownCheck") == 0);
  CHECK(res.reports[3].id == "theorem_5_1");
  CHECK(res.summary.errored == 1);
  CHECK(res.summary.passed == 3);
  CHECK_FALSE(res.summary.pass());
}

TEST_CASE("reports are deterministic") {
  Context a(small_grid()), b(small_grid());
  SuiteRequest req;
  req.ids = {"theorem_C", "theorem_3_1_eq_3_4", "lemma_6_1", "eq_5_6"};
  req.providers = {"sphere3", "pulled_cigar", "grid"};
  req.samples = 2;
  req.threads = 3;
  const SuiteResult x = run_suite(req, a);
  req.threads = 1;
  const SuiteResult y = run_suite(req, b);
  REQUIRE(x.reports.size() == y.reports.size());
  for (std::size_t i = 0; i < x.reports.size(); ++i) {
    CHECK(x.reports[i].id == y.reports[i].id);
    CHECK(x.reports[i].provider == y.reports[i].provider);
    CHECK(x.reports[i].max_residual == y.reports[i].max_residual);
    CHECK(x.reports[i].mean_residual == y.reports[i].mean_residual);
    CHECK(x.reports[i].details == y.reports[i].details);
  }
  // a different seed moves the sample points
  req.seed = 2;
  const SuiteResult z = run_suite(req, b);
  CHECK(z.reports[0].max_residual != x.reports[0].max_residual);
}

TEST_CASE("each mutation fails at least one named check") {
  Context ctx(small_grid());
  const std::vector<std::pair<mutation::Kind, std::vector<std::string>>> cases{
      {mutation::Kind::FlipCurvatureSign, {"prop_2_3_eq_2_5", "theorem_3_1_eq_3_4"}},
      {mutation::Kind::DropGamma00Gradient, {"theorem_3_1_eq_3_4", "curvext_B4"}},
      {mutation::Kind::DropGamma00Speed, {"theorem_3_1_eq_3_4", "lemma_3_2_eq_3_6"}},
      {mutation::Kind::DropGamma00Drift, {"theorem_3_1_eq_3_4", "lemma_3_2_eq_3_6"}},
      {mutation::Kind::DropRcDotH, {"lemma_2_2", "prop_2_3_eq_2_4"}},
  };
  for (const auto& [kind, ids] : cases) {
    SuiteRequest req;
    req.ids = ids;
    req.providers = {"sphere3", "cigar", "pulled_cigar"};
    req.samples = 3;
    req.mutation = kind;
    const SuiteResult res = run_suite(req, ctx);
    INFO(mutation::name(kind));
    CHECK(res.summary.failed > 0);
    CHECK(mutation::active() == mutation::Kind::None);
  }
}

TEST_CASE("Harnack positivity on the shrinking spheres") {
  Context ctx(small_grid());
  for (const std::string p : {"sphere2", "sphere3"}) {
    const CheckReport r = run("harnack_positivity_sphere", p, ctx);
    CHECK(r.pass);
    CHECK(r.n_points == 3000);
    CHECK(r.detail("z_min") >= -1e-9);
    CHECK(r.detail("tR_error") <= 1e-10);
    CHECK(r.detail("tR_increasing") == 1.0);
  }
}

TEST_CASE("N-slopes on sphere and cigar") {
  Context ctx(small_grid());
  for (const std::string p : {"sphere2", "cigar"}) {
    const CheckReport r = run("lemma_6_2_slopes", p, ctx);
    CHECK(r.pass);
    for (const char* q : {"slope_ginv", "slope_gamma", "slope_riem"}) {
      CHECK(r.detail(q) >= -1.1);
      CHECK(r.detail(q) <= -0.9);
    }
  }
}
