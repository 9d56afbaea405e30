#pragma once

// The check catalog: named residual checks over providers, sample points and
// frames, each producing a CheckReport.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "riccilab/flow.hpp"
#include "riccilab/mutation.hpp"

namespace riccilab {

enum class CheckKind {
  Pointwise,       // any solution of the modified flow
  PlainPointwise,  // needs V = 0
  Family,          // two-parameter family in (t, s)
  Special,         // bespoke sampling (Harnack positivity, N-slopes)
};

enum class ToleranceRule { Absolute, StencilScaled };
std::string rule_name(ToleranceRule r);

struct CheckInfo {
  std::string id;
  std::string citation;  // quote anchor
  CheckKind kind;
  double analytic_tolerance;
  int depth;             // derivatives of g or h entering the residual (time counts twice)
  bool linear_in_h;      // residual scales with the size of h rather than of the metric perturbation
  int order;             // weighted jet order evaluated
};

const std::vector<CheckInfo>& catalog();
/// Throws UnknownCheck.
const CheckInfo& check_info(const std::string& id);
std::vector<std::string> catalog_ids();

/// Names accepted as providers: closed forms (flat, flat3, sphere2, sphere3,
/// cigar, s2xs1), pulled-back versions (pulled_<name>, non-gradient V) and
/// `grid` (the perturbed-flat periodic run). Family checks read flat, sphere
/// and s2xs1 as their scaling families.
std::vector<std::string> known_providers();
bool applicable(const CheckInfo& info, const std::string& provider);
std::vector<std::string> default_providers(const CheckInfo& info);

struct GridSetup {
  int resolution = 32;
  int accuracy = 4;
  double amplitude = 0.05;    // metric perturbation of the flat torus
  double h_amplitude = 1.0;
  double horizon = 0.05;
  double s0 = 1e-3;
  double cfl = 0.2;
  std::uint64_t seed = 1;
  /// Optional snapshot file with the initial g (and h). Must be a 2-D grid at
  /// `resolution`; `amplitude` should bound its deviation from flat, since the
  /// tolerance rule reads it.
  std::string initial;

  /// Throws ConfigInvalid naming the offending field.
  void validate() const;
};

/// Initial data of the grid run: the snapshot in `initial`, otherwise a
/// perturbed flat metric. h is random when requested and not in the file.
GridState grid_initial_state(const GridSetup& setup, bool with_h);

/// Shared lazily built state (grid runs). Thread-safe.
class Context {
 public:
  explicit Context(GridSetup setup = {});

  const GridSetup& setup() const { return setup_; }
  Grid grid() const;
  std::shared_ptr<const GridTrajectory> base();
  /// Family with s0 (halvings = 0) or s0 / 2 (halvings = 1).
  std::shared_ptr<const GridTrajectory> family(int halvings);

 private:
  GridSetup setup_;
  std::mutex mutex_;
  std::shared_ptr<const GridTrajectory> base_;
  std::shared_ptr<const GridTrajectory> families_[2];
};

struct CheckSpec {
  std::string id;
  std::string provider;
  int samples = 0;  // 0 selects the per-check default
  int frames = 0;   // random frames per point for quadratic checks; 0 = default
  double frame_scale = 1.0;
  std::uint64_t seed = 1;
  double tolerance = 0.0;  // 0 selects the budget from the tolerance rule
};

struct CheckReport {
  std::string id;
  std::string citation;
  std::string provider;
  int n_points = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double tolerance = 0.0;
  ToleranceRule rule = ToleranceRule::Absolute;
  bool pass = false;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // error kind and message when the check threw
  std::vector<std::pair<std::string, double>> details;

  double detail(const std::string& key) const;  // NaN when absent
};

/// Tolerance for a check on a provider under the given grid setup.
double tolerance_budget(const CheckInfo& info, const std::string& provider, const GridSetup& setup);

/// Runs one check on one provider. Throws UnknownCheck or ProviderUnavailable;
/// any other error is recorded in the report.
CheckReport run_check(const CheckSpec& spec, Context& ctx);

struct SuiteRequest {
  std::vector<std::string> ids;
  std::vector<std::string> providers;  // empty: each check's defaults
  int samples = 0;
  std::uint64_t seed = 1;
  mutation::Kind mutation = mutation::Kind::None;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SuiteSummary {
  int total = 0;
  int passed = 0;
  int failed = 0;
  int errored = 0;
  bool pass() const { return failed == 0 && errored == 0; }
};

struct SuiteResult {
  std::vector<CheckReport> reports;  // ordered by request id order, then provider order
  SuiteSummary summary;
};

/// Runs every (id, provider) pair concurrently. Providers a check cannot use
/// are skipped when they come from an explicit list. The mutation, if any, is
/// active for the whole suite.
SuiteResult run_suite(const SuiteRequest& request, Context& ctx);

}  // namespace riccilab
