#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "riccilab/cli.hpp"
#include "riccilab/errors.hpp"

using namespace riccilab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("riccilab_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(RICCI_LAB_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.checks = {"lemma_2_2", "theorem_C"};
  c.providers = {"sphere3", "grid"};
  c.grid.resolution = 24;
  c.grid.s0 = 5e-4;
  c.flow.provider = "cigar";
  c.flow.snapshot_every = 3;
  c.convergence.n_grid = {10.0, 100.0};
  c.seed = 77;
  c.mutation = "drop_rc_dot_h";
  c.formats = {"csv"};
  const std::string text = config_to_json(c);
  const RunConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.grid.s0 == 5e-4);
  CHECK(back.checks == c.checks);

  const RunConfig defaults = config_from_json("{}");
  CHECK(config_to_json(defaults) == config_to_json(RunConfig{}));
}

TEST_CASE("config errors name the field") {
  CHECK_THROWS_WITH_AS(config_from_json(R"({"grid": {"resolution": 4}})"), doctest::Contains("grid.resolution"),
                       ConfigInvalid);
  // 12 nodes cannot hold the widest fourth-order stencil
  CHECK_THROWS_WITH_AS(config_from_json(R"({"grid": {"resolution": 12}})"), doctest::Contains("grid.resolution"),
                       ConfigInvalid);
  CHECK_NOTHROW(config_from_json(R"({"grid": {"resolution": 12, "accuracy": 0}})"));
  CHECK_THROWS_WITH_AS(config_from_json(R"({"grid": {"resolutoin": 32}})"), doctest::Contains("grid.resolutoin"),
                       ConfigInvalid);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"seed": "one"})"), doctest::Contains("seed"), ConfigInvalid);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"checks": ["lemma_9_9"]})"), doctest::Contains("lemma_9_9"),
                       ConfigInvalid);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"flow": {"provider": "pulled_cigar"}})"),
                       doctest::Contains("flow.provider"), ConfigInvalid);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"convergence": {"n_grid": [100, 10]}})"),
                       doctest::Contains("convergence.n_grid"), ConfigInvalid);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"schema_version": 2})"), doctest::Contains("schema_version"),
                       ConfigInvalid);
  CHECK_THROWS_AS(config_from_json(R"({"mutation": "flip_everything"})"), ConfigInvalid);
  CHECK_THROWS_AS(config_from_json("{not json"), ConfigInvalid);
  CHECK_THROWS_AS(load_config("/nonexistent/riccilab.json"), ConfigInvalid);
}

TEST_CASE("bundled configs load") {
  for (const auto& entry : fs::directory_iterator(RICCILAB_CONFIG_DIR)) {
    INFO(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}

TEST_CASE("report JSON is reproducible and complete") {
  RunConfig c;
  c.checks = {"lemma_2_2", "theorem_3_1_eq_3_4", "lemma_6_1"};
  c.providers = {"sphere2", "pulled_cigar"};
  c.samples = 2;
  c.grid.resolution = 16;
  Context a(c.grid), b(c.grid);
  const SuiteResult x = run_suite(suite_request(c), a);
  const SuiteResult y = run_suite(suite_request(c), b);
  const std::string text = reports_json(x);
  CHECK(text == reports_json(y));

  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["schema_version"] == kReportSchema);
  CHECK(j["summary"]["total"] == 5);
  CHECK(j["summary"]["pass"] == true);
  for (const auto& r : j["reports"]) {
    for (const char* key : {"id", "citation", "provider", "n_points", "max_residual", "mean_residual", "tolerance",
                            "rule", "pass", "seed", "error", "details"})
      CHECK(r.contains(key));
    CHECK_FALSE(r.contains("runtime_s"));
  }

  const std::string csv = reports_csv(x);
  CHECK(csv.rfind("id,provider,citation,n_points,max_residual,mean_residual,tolerance,rule,pass,seed,error\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  const std::string table = summary_table(x);
  CHECK(table.find("lemma_6_1") != std::string::npos);
  CHECK(table.find("5 runs: 5 passed") != std::string::npos);
}

TEST_CASE("flow trace on the shrinking sphere follows 2t/(1-2t)") {
  RunConfig c;
  c.flow.provider = "sphere2";
  c.flow.horizon = 0.3;
  c.flow.steps = 6;
  c.flow.points = 4;
  c.flow.frames = 8;
  const std::vector<TraceRow> rows = flow_trace(c);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = rows[i].t;
    CHECK(rows[i].min_tR == doctest::Approx(2 * t / (1 - 2 * t)).epsilon(1e-10));
    CHECK(rows[i].min_Z >= -1e-9);
    if (i > 0) CHECK(rows[i].min_tR > rows[i - 1].min_tR);
  }
  CHECK(trace_csv(rows).rfind("t,min_tR,min_Z\n", 0) == 0);

  c.flow.provider = "flat";
  for (const TraceRow& r : flow_trace(c)) CHECK(r.min_tR == 0.0);

  c.flow.provider = "sphere2";
  c.flow.horizon = 0.6;
  CHECK_THROWS_AS(flow_trace(c), ConfigInvalid);
}

TEST_CASE("grid flow trace writes snapshots") {
  const fs::path dir = scratch("snap");
  RunConfig c;
  c.flow.provider = "grid";
  c.flow.horizon = 0.01;
  c.grid.resolution = 16;
  CHECK_THROWS_WITH_AS(flow_trace(c, dir.string()), doctest::Contains("flow.horizon"), ConfigInvalid);
  c.flow.horizon = 0.2;
  c.flow.steps = 3;
  c.flow.points = 3;
  c.flow.frames = 4;
  c.flow.snapshot_every = 5;
  c.grid.resolution = 16;
  const std::vector<TraceRow> rows = flow_trace(c, dir.string());
  CHECK(rows.size() == 3);
  for (const TraceRow& r : rows) {
    CHECK(std::isfinite(r.min_tR));
    CHECK(std::isfinite(r.min_Z));
  }
  CHECK(fs::exists(dir / "snap_000000.json"));
  CHECK(fs::exists(dir / "snap_000005.json"));
}

TEST_CASE("grid runs start from a snapshot file") {
  const fs::path dir = scratch("initial");
  Grid grid;
  grid.resolution = 16;
  FlowSnapshot snap;
  snap.g = conformal_mode_metric(grid, 0.05, {1, 1});
  const std::string path = (dir / "initial.json").string();
  write_snapshot(path, grid, snap);

  RunConfig c;
  c.grid.resolution = 16;
  c.grid.initial = path;
  CHECK(config_from_json(config_to_json(c)).grid.initial == path);
  c.flow.provider = "grid";
  c.flow.horizon = 0.2;
  c.flow.steps = 2;
  c.flow.points = 2;
  c.flow.frames = 2;
  const std::vector<TraceRow> rows = flow_trace(c);
  REQUIRE(rows.size() == 2);
  // a conformal bump is not flat, so R is nonzero somewhere
  CHECK(std::abs(rows[0].min_tR) > 0.0);

  Context ctx(c.grid);
  CheckSpec spec;
  spec.id = "lemma_2_2";
  spec.provider = "grid";
  spec.samples = 2;
  const CheckReport r = run_check(spec, ctx);
  CHECK(r.error.empty());
  CHECK(r.pass);

  c.grid.resolution = 24;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("grid.initial"), ConfigInvalid);
  c.grid.resolution = 16;
  c.grid.initial = (dir / "missing.json").string();
  CHECK_THROWS_AS(c.validate(), ConfigInvalid);
}

TEST_CASE("convergence runs fit slopes near -1") {
  RunConfig c;
  c.convergence.providers = {"sphere2", "pulled_cigar"};
  c.convergence.points = 2;
  const std::vector<ConvergenceResult> runs = convergence_runs(c);
  REQUIRE(runs.size() == 2);
  for (const ConvergenceResult& r : runs) {
    CHECK_FALSE(r.report.fits.empty());
    for (const SlopeFit& f : r.report.fits)
      if (!f.exact) CHECK(std::abs(f.slope + 1.0) <= 0.1);
  }
}

TEST_CASE("suite request carries the config") {
  RunConfig c;
  c.checks = {"compat"};
  c.seed = 9;
  c.samples = 4;
  c.threads = 2;
  c.mutation = "drop_gamma00_speed";
  const SuiteRequest r = suite_request(c);
  CHECK(r.ids == c.checks);
  CHECK(r.seed == 9);
  CHECK(r.samples == 4);
  CHECK(r.threads == 2);
  CHECK(r.mutation == mutation::Kind::DropGamma00Speed);
  RunConfig all;
  CHECK(suite_request(all).ids == catalog_ids());
}

TEST_CASE("tool exit codes") {
  const fs::path dir = scratch("tool");
  const std::string out = " --out " + (dir / "run").string();
  CHECK(run_tool("verify --checks lemma_2_2 --provider flat --format json,csv" + out) == 0);
  CHECK(fs::exists(dir / "run" / "reports.json"));
  CHECK(fs::exists(dir / "run" / "reports.csv"));
  CHECK(fs::exists(dir / "run" / "summary.txt"));
  const std::string first = slurp(dir / "run" / "reports.json");
  CHECK(run_tool("verify --checks lemma_2_2 --provider flat" + out) == 0);
  CHECK(slurp(dir / "run" / "reports.json") == first);

  CHECK(run_tool("verify --checks theorem_C --provider sphere3 --samples 3 --mutation flip_curvature_sign" + out) ==
        1);
  CHECK(run_tool("verify --checks lemma_9_9" + out) == 2);
  CHECK(run_tool("verify --format xml" + out) == 2);
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"grid": {"resolution": 3}})";
  }
  CHECK(run_tool("verify --config " + (dir / "bad.json").string() + out) == 2);
  CHECK(run_tool("flow --provider sphere2" + out) == 0);
  CHECK(fs::exists(dir / "run" / "flow_trace.csv"));
  CHECK(run_tool("nonsense") == 2);
}
