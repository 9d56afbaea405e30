// ricci_lab: run the check catalog, trace Harnack quantities along a flow, or
// fit the N-convergence of the approximating metric.
//
// Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 runtime error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "riccilab/cli.hpp"
#include "riccilab/errors.hpp"

using namespace riccilab;
namespace fs = std::filesystem;

namespace {

enum Exit { kPass = 0, kFail = 1, kConfig = 2, kRuntime = 3 };

struct Overrides {
  std::string config;
  std::vector<std::string> checks;
  std::vector<std::string> providers;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<unsigned> threads;
  std::string out;
  std::vector<std::string> formats;
  std::string mutation;
};

RunConfig effective_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.checks.empty()) c.checks = o.checks;
  if (!o.providers.empty()) c.providers = o.providers;
  if (o.seed) c.seed = *o.seed;
  if (o.samples) c.samples = *o.samples;
  if (o.threads) c.threads = *o.threads;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.formats.empty()) c.formats = o.formats;
  if (!o.mutation.empty()) c.mutation = o.mutation;
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

bool has_format(const RunConfig& c, const std::string& f) {
  return std::find(c.formats.begin(), c.formats.end(), f) != c.formats.end();
}

int cmd_verify(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  Context ctx(c.grid);
  const SuiteResult result = run_suite(suite_request(c), ctx);
  if (has_format(c, "json")) write_file(dir / "reports.json", reports_json(result));
  if (has_format(c, "csv")) write_file(dir / "reports.csv", reports_csv(result));
  const std::string table = summary_table(result);
  write_file(dir / "summary.txt", table);
  std::cout << table;
  for (const CheckReport& r : result.reports)
    if (!r.error.empty()) std::cerr << r.id << " on " << r.provider << ": " << r.error << '\n';
  return result.summary.pass() ? kPass : kFail;
}

int cmd_flow(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  std::string snapshots;
  if (c.flow.provider == "grid" && c.flow.snapshot_every > 0) {
    snapshots = (dir / "snapshots").string();
    fs::create_directories(snapshots);
  }
  const std::vector<TraceRow> rows = flow_trace(c, snapshots);
  const std::string csv = trace_csv(rows);
  write_file(dir / "flow_trace.csv", csv);
  std::cout << csv;
  bool increasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].min_tR > rows[i - 1].min_tR)) increasing = false;
  std::cout << "min tR strictly increasing: " << (increasing ? "yes" : "no") << '\n';
  return kPass;
}

int cmd_convergence(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  std::printf("%-16s %-8s %10s\n", "provider", "residual", "slope");
  for (const ConvergenceResult& r : convergence_runs(c)) {
    write_file(dir / ("convergence_" + r.provider + ".csv"), r.report.csv());
    for (const SlopeFit& f : r.report.fits) {
      if (f.exact)
        std::printf("%-16s %-8s %10s\n", r.provider.c_str(), f.quantity.c_str(), "exact");
      else
        std::printf("%-16s %-8s %10.4f\n", r.provider.c_str(), f.quantity.c_str(), f.slope);
    }
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for Ricci flow space-time identities"};
  app.require_subcommand(1);
  Overrides o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration")->envname("RICCILAB_CONFIG");
    sub->add_option("--checks", o.checks, "check ids (comma separated)")->delimiter(',')->envname("RICCILAB_CHECKS");
    sub->add_option("--provider", o.providers, "provider names (comma separated)")
        ->delimiter(',')
        ->envname("RICCILAB_PROVIDER");
    sub->add_option("--seed", o.seed, "random seed")->envname("RICCILAB_SEED");
    sub->add_option("--samples", o.samples, "sample points per check (0 = defaults)")->envname("RICCILAB_SAMPLES");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)")->envname("RICCILAB_THREADS");
    sub->add_option("--out", o.out, "output directory")->envname("RICCILAB_OUT");
    sub->add_option("--format", o.formats, "report formats: json, csv")
        ->delimiter(',')
        ->check(CLI::IsMember({"json", "csv"}))
        ->envname("RICCILAB_FORMAT");
    sub->add_option("--mutation", o.mutation, "inject a fault for mutation testing")->envname("RICCILAB_MUTATION");
  };
  CLI::App* verify = app.add_subcommand("verify", "run the check catalog");
  CLI::App* flow = app.add_subcommand("flow", "trace tR and the Harnack quantity along a flow");
  CLI::App* convergence = app.add_subcommand("convergence", "fit residual slopes against N");
  bool dump = false;
  for (CLI::App* sub : {verify, flow, convergence}) {
    common(sub);
    sub->add_flag("--dump-config", dump, "print the effective configuration and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const RunConfig c = effective_config(o);
    if (dump) {
      std::cout << config_to_json(c);
      return kPass;
    }
    if (verify->parsed()) return cmd_verify(c);
    if (flow->parsed()) return cmd_flow(c);
    return cmd_convergence(c);
  } catch (const ConfigInvalid& e) {
    std::cerr << e.what() << '\n';
    return kConfig;
  } catch (const UnknownCheck& e) {
    std::cerr << e.what() << '\n';
    return kConfig;
  } catch (const CflViolation& e) {
    std::cerr << "flow aborted: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kRuntime;
  }
}
