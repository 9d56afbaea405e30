#pragma once

// Method-of-lines integration on a uniform periodic grid: Ricci flow, the
// modified flow with a fixed 1-form, the linearized equation for h, and the
// two-parameter DeTurck family. Node jets for the identity checks combine
// stencil derivatives in space with Cauchy-Kovalevskaya (Picard) expansion
// in time.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "riccilab/riemann.hpp"

namespace riccilab {

struct Grid {
  int n = 2;
  int resolution = 32;
  /// Even finite-difference order; 0 selects spectral differentiation.
  int accuracy = 4;
  double length = 6.283185307179586;

  double dx() const { return length / resolution; }
  std::size_t nodes() const;
  std::vector<double> coords(std::size_t node) const;
  /// Node whose coordinates match x (mod the period); PointOutOfChart otherwise.
  std::size_t node_at(const std::vector<double>& x) const;
  std::size_t node_of(const std::array<int, kMaxSpatialDim>& index) const;
  std::array<int, kMaxSpatialDim> index_of(std::size_t node) const;
  /// Throws ConfigInvalid on unusable parameters.
  void validate() const;
};

using Field = std::vector<double>;

/// Periodic tensor field, every component stored (symmetric fields keep both
/// halves equal).
struct GridTensor {
  int dim = 0;
  int rank = 0;
  std::vector<Field> comps;

  GridTensor() = default;
  GridTensor(int dim, int rank, std::size_t nodes, double fill = 0.0);

  Field& operator()(int i) { return comps[i]; }
  const Field& operator()(int i) const { return comps[i]; }
  Field& operator()(int i, int j) { return comps[i * dim + j]; }
  const Field& operator()(int i, int j) const { return comps[i * dim + j]; }
  std::size_t nodes() const { return comps.empty() ? 0 : comps[0].size(); }
  double max_abs() const;
};

GridTensor operator+(const GridTensor& a, const GridTensor& b);
GridTensor operator-(const GridTensor& a, const GridTensor& b);
GridTensor operator*(double s, const GridTensor& a);

/// Central weights on offsets -r..r for the m-th derivative, unit spacing.
std::vector<double> fd_weights(int m, int radius);
/// Stencil radius for the m-th derivative at the given even accuracy.
int fd_radius(int m, int accuracy);

class Stencils {
 public:
  explicit Stencils(const Grid& grid, int max_derivative = kMaxJetOrder);

  const Grid& grid() const { return grid_; }
  /// d^alpha f at one node; alpha holds spatial exponents.
  double at(const Field& f, std::size_t node, const Exponents& alpha) const;
  /// d^alpha f at every node.
  Field apply(const Field& f, const Exponents& alpha) const;

 private:
  Field apply_axis(const Field& f, int axis, int m) const;

  Grid grid_;
  std::vector<std::vector<double>> weights_;  // per derivative order, offsets -r..r
  std::vector<int> radius_;
};

/// Spatial Taylor jets (no time dependence) of every component at a node.
TensorJ node_jet(const Stencils& st, const GridTensor& t, std::size_t node, int degree);

// Right-hand sides as jet maps. Each takes jets of degree K and returns
// degree K - 2; the grid integrator uses K = 2 at every node.
TensorJ ricci_flow_rhs(const TensorJ& g, const CotensorJet* v = nullptr);
TensorJ deturck_rhs(const TensorJ& g_s, const TensorJ& g_base);
TensorJ linearized_rhs(const TensorJ& g, const TensorJ& h);

/// W_k = g_kl g^ij (Gamma^l_ij(t,s) - Gamma^l_ij(t,0)) with g = g(t,s).
CotensorJet deturck_w(const TensorJ& g_s, const TensorJ& g_base);

/// Time jets by Picard iteration of dg/dt = F(g) from spatial data at t0.
TensorJ ck_base(const TensorJ& g_spatial, int order);
TensorJ ck_member(const TensorJ& g_spatial, const TensorJ& g_base, int order);
TensorJ ck_h(const TensorJ& h_spatial, const TensorJ& g_base, int order);

struct GridState {
  Grid grid;
  double t = 0.0;
  double dt = 0.0;
  GridTensor g;
  std::optional<GridTensor> h;
  std::optional<GridTensor> v;  // fixed 1-form of the modified flow
};

struct StepOptions {
  double cfl = 0.2;
};

/// c dx^2 / max |g^-1| over the nodes (the largest admissible step).
double cfl_limit(const Grid& grid, const GridTensor& g, double cfl);
/// Uniform step reaching `horizon` exactly, at most 0.8 of the CFL limit.
double choose_dt(const Grid& grid, const GridTensor& g, double cfl, double horizon);

/// One RK4 step of dg/dt = -2 Rc + nabla V + (nabla V)^T (V from the state,
/// zero when absent). Throws CflViolation or MetricDegenerated.
GridState step_ricci(const GridState& s, const StepOptions& opt = {});
/// One RK4 step of g and h together; h follows the linearized equation.
GridState step_h(const GridState& s, const StepOptions& opt = {});

/// max |dH/dt - Delta H - 2 Rc.h| over the nodes, with dH/dt from the
/// h-equation right-hand side and Delta H from the stencils applied to H.
double trace_evolution_check(const GridState& s);

/// Grid-wide pointwise Ricci tensor (stencil derivatives to second order).
GridTensor grid_ricci(const Stencils& st, const GridTensor& g);
/// Grid-wide scalar curvature.
Field grid_scalar(const Stencils& st, const GridTensor& g);

struct FlowSnapshot {
  double t = 0.0;
  GridTensor g;
  std::optional<GridTensor> h;
  std::vector<GridTensor> members;  // g(t, k s0) for k = -2, -1, 1, 2
};

struct GridTrajectory {
  Grid grid;
  double dt = 0.0;
  double s0 = 0.0;  // zero unless the family members are present
  std::vector<FlowSnapshot> snapshots;

  bool has_h() const { return !snapshots.empty() && snapshots.front().h.has_value(); }
  bool has_members() const { return !snapshots.empty() && snapshots.front().members.size() == 4; }
  /// Snapshot index at time t; throws PointOutOfChart if none matches.
  std::size_t snapshot_at(double t) const;
};

/// Integrates g (and h when present) to `horizon`, keeping every step.
GridTrajectory integrate_flow(const GridState& initial, double horizon, const StepOptions& opt = {});

/// Re-integrates the stored base flow jointly with the members g(t, k s0),
/// k in {-2, -1, 1, 2}, started from g0 + k s0 h0 and evolved by the DeTurck
/// flow against the base. Throws BaseTrajectoryMissing when `base` is empty
/// or carries no h.
GridTrajectory build_deturck_family(const GridTrajectory& base, double s0, const StepOptions& opt = {});

// Initial data.
GridTensor perturbed_flat_metric(const Grid& grid, double amplitude, std::uint64_t seed);
GridTensor random_symmetric_field(const Grid& grid, double amplitude, std::uint64_t seed);
/// Conformally flat g = (1 + amplitude sin(k.x)) delta.
GridTensor conformal_mode_metric(const Grid& grid, double amplitude, const std::vector<int>& k);

// Snapshot files (JSON, schema_version 1).
void write_snapshot(const std::string& path, const Grid& grid, const FlowSnapshot& snap);
FlowSnapshot read_snapshot(const std::string& path, Grid* grid = nullptr);

/// The base flow of a trajectory as a jet provider. Points are grid nodes at
/// stored times; time jets come from the flow equations.
ProviderPtr make_grid_provider(std::shared_ptr<const GridTrajectory> traj, std::string id = "grid");

/// Jets of every member of a two-parameter family at one point.
struct FamilyPoint {
  ChartPoint point;
  double s0 = 0.0;
  std::array<MetricJet, 5> members;  // index k + 2 holds g(t, k s0)
  CotensorJet h;                     // independently evolved h

  const MetricJet& member(int k) const { return members[k + 2]; }
};

class TwoParamFamily {
 public:
  virtual ~TwoParamFamily() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual double s0() const = 0;
  virtual bool on_grid() const = 0;
  virtual ChartPoint sample_point(CounterRng& rng) const = 0;
  virtual FamilyPoint at(const ChartPoint& p, int order) const = 0;
  /// Snapshot spacing for time differences (0 for closed forms).
  virtual double time_step() const { return 0.0; }
};

using FamilyPtr = std::shared_ptr<const TwoParamFamily>;

FamilyPtr make_grid_family(std::shared_ptr<const GridTrajectory> traj, std::string id = "grid_family");

/// g(t, s) = (1 + s) g(t / (1 + s)) for a provider whose Christoffel symbols
/// do not depend on t (flat, spheres, S2 x S1), so W = 0 and h = g + 2t Rc.
/// Throws ConfigInvalid for other families.
FamilyPtr make_scaling_family(ProviderPtr base, double s0);

}  // namespace riccilab
