#include "riccilab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "riccilab/errors.hpp"
#include "riccilab/harnack.hpp"

namespace riccilab {

using nlohmann::json;

namespace {

bool is_closed(const std::string& p) {
  const auto names = closed_form_provider_names();
  return std::find(names.begin(), names.end(), p) != names.end();
}

bool is_known(const std::string& p) {
  const auto names = known_providers();
  return std::find(names.begin(), names.end(), p) != names.end();
}

ProviderPtr named_provider(const std::string& name) {
  if (name.rfind("pulled_", 0) == 0) {
    const std::string base = name.substr(7);
    const auto names = closed_form_provider_names();
    const auto it = std::find(names.begin(), names.end(), base);
    if (it == names.end()) throw ConfigInvalid("unknown provider '" + name + "'");
    // same pullbacks as the check catalog
    return make_pulled_back(provider_from_name(base), 101 + static_cast<std::uint64_t>(it - names.begin()));
  }
  return provider_from_name(name);
}

}  // namespace

// ---------------------------------------------------------------------------
// Validation

void RunConfig::validate() const {
  if (schema_version != kConfigSchema)
    throw ConfigInvalid("schema_version must be " + std::to_string(kConfigSchema));
  for (const std::string& id : checks) {
    try {
      check_info(id);
    } catch (const UnknownCheck&) {
      throw ConfigInvalid("checks: unknown check id '" + id + "'");
    }
  }
  for (const std::string& p : providers)
    if (!is_known(p)) throw ConfigInvalid("providers: unknown provider '" + p + "'");
  grid.validate();
  if (samples < 0 || samples > 10000) throw ConfigInvalid("samples must be in [0, 10000]");
  if (threads > 256) throw ConfigInvalid("threads must be at most 256");
  mutation::from_name(mutation);
  if (output_dir.empty()) throw ConfigInvalid("output_dir must not be empty");
  if (formats.empty()) throw ConfigInvalid("formats must name at least one of json, csv");
  for (const std::string& f : formats)
    if (f != "json" && f != "csv") throw ConfigInvalid("formats: unknown format '" + f + "'");

  if (flow.provider != "grid" && !is_closed(flow.provider))
    throw ConfigInvalid("flow.provider must be a closed-form provider or grid");
  if (!(flow.horizon > 0.0)) throw ConfigInvalid("flow.horizon must be positive");
  if (flow.steps < 1 || flow.steps > 100000) throw ConfigInvalid("flow.steps must be in [1, 100000]");
  if (flow.points < 1) throw ConfigInvalid("flow.points must be positive");
  if (flow.frames < 1) throw ConfigInvalid("flow.frames must be positive");
  if (flow.snapshot_every < 0) throw ConfigInvalid("flow.snapshot_every must be nonnegative");

  for (const std::string& p : convergence.providers)
    if (p == "grid" || !is_known(p)) throw ConfigInvalid("convergence.providers: unsupported provider '" + p + "'");
  if (convergence.points < 1) throw ConfigInvalid("convergence.points must be positive");
  if (convergence.n_grid.size() < 2) throw ConfigInvalid("convergence.n_grid needs at least two values");
  for (std::size_t i = 0; i < convergence.n_grid.size(); ++i)
    if (!(convergence.n_grid[i] > 0.0) || (i > 0 && !(convergence.n_grid[i] > convergence.n_grid[i - 1])))
      throw ConfigInvalid("convergence.n_grid must be positive and increasing");
}

// ---------------------------------------------------------------------------
// JSON

std::string config_to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["checks"] = c.checks;
  j["providers"] = c.providers;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["threads"] = c.threads;
  j["mutation"] = c.mutation;
  j["output_dir"] = c.output_dir;
  j["formats"] = c.formats;
  j["grid"] = {{"resolution", c.grid.resolution}, {"accuracy", c.grid.accuracy},   {"amplitude", c.grid.amplitude},
               {"h_amplitude", c.grid.h_amplitude}, {"horizon", c.grid.horizon}, {"s0", c.grid.s0},
               {"cfl", c.grid.cfl},               {"seed", c.grid.seed},           {"initial", c.grid.initial}};
  j["flow"] = {{"provider", c.flow.provider}, {"horizon", c.flow.horizon}, {"steps", c.flow.steps},
               {"points", c.flow.points},     {"frames", c.flow.frames},   {"snapshot_every", c.flow.snapshot_every}};
  j["convergence"] = {
      {"providers", c.convergence.providers}, {"points", c.convergence.points}, {"n_grid", c.convergence.n_grid}};
  return j.dump(2) + "\n";
}

namespace {

// Reads an optional key into `out`, naming the full path on type errors.
template <class T>
void read(const json& obj, const std::string& key, const std::string& prefix, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigInvalid(prefix + key + ": wrong type");
  }
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigInvalid((prefix.empty() ? "config" : prefix.substr(0, prefix.size() - 1)) +
                                            ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigInvalid(prefix + k + ": unknown key");
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  only_keys(j,
            {"schema_version", "checks", "providers", "seed", "samples", "threads", "mutation", "output_dir", "formats",
             "grid", "flow", "convergence"},
            "");
  read(j, "schema_version", "", c.schema_version);
  read(j, "checks", "", c.checks);
  read(j, "providers", "", c.providers);
  read(j, "seed", "", c.seed);
  read(j, "samples", "", c.samples);
  int threads = static_cast<int>(c.threads);
  read(j, "threads", "", threads);
  if (threads < 0) throw ConfigInvalid("threads must be nonnegative");
  c.threads = static_cast<unsigned>(threads);
  read(j, "mutation", "", c.mutation);
  read(j, "output_dir", "", c.output_dir);
  read(j, "formats", "", c.formats);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    only_keys(g, {"resolution", "accuracy", "amplitude", "h_amplitude", "horizon", "s0", "cfl", "seed", "initial"},
              "grid.");
    read(g, "resolution", "grid.", c.grid.resolution);
    read(g, "accuracy", "grid.", c.grid.accuracy);
    read(g, "amplitude", "grid.", c.grid.amplitude);
    read(g, "h_amplitude", "grid.", c.grid.h_amplitude);
    read(g, "horizon", "grid.", c.grid.horizon);
    read(g, "s0", "grid.", c.grid.s0);
    read(g, "cfl", "grid.", c.grid.cfl);
    read(g, "seed", "grid.", c.grid.seed);
    read(g, "initial", "grid.", c.grid.initial);
  }
  if (j.contains("flow")) {
    const json& f = j["flow"];
    only_keys(f, {"provider", "horizon", "steps", "points", "frames", "snapshot_every"}, "flow.");
    read(f, "provider", "flow.", c.flow.provider);
    read(f, "horizon", "flow.", c.flow.horizon);
    read(f, "steps", "flow.", c.flow.steps);
    read(f, "points", "flow.", c.flow.points);
    read(f, "frames", "flow.", c.flow.frames);
    read(f, "snapshot_every", "flow.", c.flow.snapshot_every);
  }
  if (j.contains("convergence")) {
    const json& v = j["convergence"];
    only_keys(v, {"providers", "points", "n_grid"}, "convergence.");
    read(v, "providers", "convergence.", c.convergence.providers);
    read(v, "points", "convergence.", c.convergence.points);
    read(v, "n_grid", "convergence.", c.convergence.n_grid);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw ConfigInvalid("cannot write config " + path);
  out << config_to_json(c);
}

SuiteRequest suite_request(const RunConfig& c) {
  SuiteRequest r;
  r.ids = c.checks.empty() ? catalog_ids() : c.checks;
  r.providers = c.providers;
  r.samples = c.samples;
  r.seed = c.seed;
  r.mutation = mutation::from_name(c.mutation);
  r.threads = c.threads;
  return r;
}

// ---------------------------------------------------------------------------
// Reports

std::string reports_json(const SuiteResult& result) {
  json reports = json::array();
  for (const CheckReport& r : result.reports) {
    json details = json::object();
    for (const auto& [k, v] : r.details) details[k] = v;
    reports.push_back({{"id", r.id},
                       {"citation", r.citation},
                       {"provider", r.provider},
                       {"n_points", r.n_points},
                       {"max_residual", r.max_residual},
                       {"mean_residual", r.mean_residual},
                       {"tolerance", r.tolerance},
                       {"rule", rule_name(r.rule)},
                       {"pass", r.pass},
                       {"seed", r.seed},
                       {"error", r.error},
                       {"details", details}});
  }
  const SuiteSummary& s = result.summary;
  json j;
  j["schema_version"] = kReportSchema;
  j["summary"] = {
      {"total", s.total}, {"passed", s.passed}, {"failed", s.failed}, {"errored", s.errored}, {"pass", s.pass()}};
  j["reports"] = reports;
  return j.dump(2) + "\n";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string reports_csv(const SuiteResult& result) {
  std::ostringstream os;
  os << "id,provider,citation,n_points,max_residual,mean_residual,tolerance,rule,pass,seed,error\n";
  for (const CheckReport& r : result.reports)
    os << r.id << ',' << r.provider << ',' << csv_field(r.citation) << ',' << r.n_points << ','
       << number(r.max_residual) << ',' << number(r.mean_residual) << ',' << number(r.tolerance) << ','
       << rule_name(r.rule) << ',' << (r.pass ? "true" : "false") << ',' << r.seed << ',' << csv_field(r.error)
       << '\n';
  return os.str();
}

std::string summary_table(const SuiteResult& result) {
  struct Row {
    std::string citation;
    int runs = 0, passed = 0;
    double worst_ratio = 0.0;
  };
  std::vector<std::string> order;
  std::map<std::string, Row> rows;
  for (const CheckReport& r : result.reports) {
    if (!rows.count(r.id)) order.push_back(r.id);
    Row& row = rows[r.id];
    row.citation = r.citation;
    ++row.runs;
    if (r.pass) ++row.passed;
    const double ratio = r.error.empty() && r.tolerance > 0.0 ? r.max_residual / r.tolerance
                                                                : std::numeric_limits<double>::infinity();
    row.worst_ratio = std::max(row.worst_ratio, ratio);
  }
  std::ostringstream os;
  os << std::left << std::setw(28) << "check" << std::setw(8) << "passed" << std::setw(14) << "max/tol"
     << "citation\n";
  for (const std::string& id : order) {
    const Row& row = rows[id];
    std::ostringstream ratio;
    ratio << std::setprecision(3) << row.worst_ratio;
    os << std::left << std::setw(28) << id << std::setw(8)
       << (std::to_string(row.passed) + "/" + std::to_string(row.runs)) << std::setw(14) << ratio.str()
       << row.citation << '\n';
  }
  const SuiteSummary& s = result.summary;
  os << s.total << " runs: " << s.passed << " passed, " << s.failed << " failed, " << s.errored << " errored\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Flow trace

namespace {

struct RowSample {
  double tr = std::numeric_limits<double>::infinity();
  double z = std::numeric_limits<double>::infinity();
};

void sample_row(const SolutionProvider& p, const std::vector<ChartPoint>& points, int frames, CounterRng& rng,
                RowSample& out) {
  std::vector<HarnackPoint> hps;
  for (const ChartPoint& pt : points) {
    const SpaceTimePoint s = spacetime_point(p, pt, 4);
    out.tr = std::min(out.tr, pt.time * s.curv.scalar.value());
    hps.push_back(harnack_point(s.jet, s.conn, s.curv, eval_h_jet(p, HFamily::Ricci, pt, 4)));
  }
  for (int f = 0; f < frames; ++f) {
    const HarnackFrame frame = random_frame(p.dim(), rng);
    out.z = std::min(out.z, linear_trace_Z(hps[f % hps.size()], frame, true).value);
  }
}

}  // namespace

std::vector<TraceRow> flow_trace(const RunConfig& c, const std::string& snapshot_dir) {
  const FlowTraceConfig& f = c.flow;
  CounterRng rng(c.seed, "flow_trace");
  std::vector<TraceRow> rows;
  if (f.provider != "grid") {
    const ProviderPtr p = provider_from_name(f.provider);
    if (!(f.horizon < p->t_max()))
      throw ConfigInvalid("flow.horizon must be below the lifetime " + std::to_string(p->t_max()) + " of " +
                          f.provider);
    for (int k = 1; k <= f.steps; ++k) {
      const double t = f.horizon * k / f.steps;
      std::vector<ChartPoint> points;
      for (int i = 0; i < f.points; ++i) {
        ChartPoint pt = p->sample_point(rng);
        pt.time = t;
        points.push_back(pt);
      }
      RowSample row;
      sample_row(*p, points, f.frames, rng, row);
      rows.push_back({t, row.tr, row.z});
    }
    return rows;
  }

  const GridState s = grid_initial_state(c.grid, false);
  auto traj = std::make_shared<const GridTrajectory>(integrate_flow(s, f.horizon, StepOptions{c.grid.cfl}));
  if (traj->snapshots.size() < 3)
    throw ConfigInvalid("flow.horizon is shorter than two grid time steps");
  if (!snapshot_dir.empty() && f.snapshot_every > 0) {
    for (std::size_t m = 0; m < traj->snapshots.size(); m += static_cast<std::size_t>(f.snapshot_every)) {
      char name[32];
      std::snprintf(name, sizeof name, "/snap_%06zu.json", m);
      write_snapshot(snapshot_dir + name, traj->grid, traj->snapshots[m]);
    }
  }
  const ProviderPtr p = make_grid_provider(traj, "grid");
  const std::size_t last = traj->snapshots.size() - 1;
  const int count = std::min<int>(f.steps, static_cast<int>(last));
  for (int k = 1; k <= count; ++k) {
    const std::size_t m = std::max<std::size_t>(1, last * static_cast<std::size_t>(k) / count);
    std::vector<ChartPoint> points;
    for (int i = 0; i < f.points; ++i) {
      ChartPoint pt = p->sample_point(rng);
      pt.time = traj->snapshots[m].t;
      points.push_back(pt);
    }
    RowSample row;
    sample_row(*p, points, f.frames, rng, row);
    rows.push_back({traj->snapshots[m].t, row.tr, row.z});
  }
  return rows;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::ostringstream os;
  os << "t,min_tR,min_Z\n";
  for (const TraceRow& r : rows) os << number(r.t) << ',' << number(r.min_tR) << ',' << number(r.min_Z) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Convergence in N

std::vector<ConvergenceResult> convergence_runs(const RunConfig& c) {
  std::vector<ConvergenceResult> out;
  for (const std::string& name : c.convergence.providers) {
    const ProviderPtr p = named_provider(name);
    CounterRng rng(c.seed, "convergence@" + name);
    std::vector<SpaceTimePoint> points;
    std::vector<Jet> fs;
    for (int i = 0; i < c.convergence.points; ++i) {
      points.push_back(spacetime_point(*p, p->sample_point(rng), 6));
      fs.push_back(make_f(FChoice::RandomBump, points.back().jet, rng.next_u64()));
    }
    out.push_back({name, convergence_study(points, fs, c.convergence.n_grid)});
  }
  return out;
}

}  // namespace riccilab
