#pragma once

// Run configuration, scenario drivers and report writers shared by the
// ricci_lab tool and the Python module.

#include <cstdint>
#include <string>
#include <vector>

#include "riccilab/approx.hpp"
#include "riccilab/verify.hpp"

namespace riccilab {

inline constexpr int kConfigSchema = 1;
inline constexpr int kReportSchema = 1;

struct FlowTraceConfig {
  std::string provider = "sphere2";  // closed form, or "grid"
  double horizon = 0.2;
  int steps = 20;          // trace rows
  int points = 16;         // sampled points per row
  int frames = 32;         // random frames per row for Z
  int snapshot_every = 0;  // grid runs: keep every k-th step on disk (0 = none)
};

struct ConvergenceConfig {
  std::vector<std::string> providers{"sphere2", "cigar"};
  int points = 3;
  std::vector<double> n_grid{1e2, 1e3, 1e4, 1e5, 1e6};
};

struct RunConfig {
  int schema_version = kConfigSchema;
  std::vector<std::string> checks;     // empty: the whole catalog
  std::vector<std::string> providers;  // empty: each check's defaults
  GridSetup grid;
  FlowTraceConfig flow;
  ConvergenceConfig convergence;
  std::uint64_t seed = 1;
  int samples = 0;
  unsigned threads = 0;
  std::string mutation = "none";
  std::string output_dir = "riccilab_out";
  std::vector<std::string> formats{"json"};

  /// Throws ConfigInvalid naming the field (UnknownCheck for bad ids).
  void validate() const;
};

std::string config_to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected. Throws
/// ConfigInvalid.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& c);

SuiteRequest suite_request(const RunConfig& c);

/// Deterministic JSON: no runtimes, fixed key order.
std::string reports_json(const SuiteResult& result);
/// Columns: id,provider,citation,n_points,max_residual,mean_residual,
/// tolerance,rule,pass,seed,error.
std::string reports_csv(const SuiteResult& result);
std::string summary_table(const SuiteResult& result);

struct TraceRow {
  double t = 0.0;
  double min_tR = 0.0;
  double min_Z = 0.0;
};

/// tR and the linear trace quadratic (h = Rc) along a flow. Grid runs write
/// snapshots into `snapshot_dir` when requested.
std::vector<TraceRow> flow_trace(const RunConfig& c, const std::string& snapshot_dir = "");
std::string trace_csv(const std::vector<TraceRow>& rows);

struct ConvergenceResult {
  std::string provider;
  ConvergenceReport report;
};
std::vector<ConvergenceResult> convergence_runs(const RunConfig& c);

}  // namespace riccilab
