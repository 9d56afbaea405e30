#include "riccilab/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <thread>

#include "riccilab/approx.hpp"
#include "riccilab/errors.hpp"
#include "riccilab/harnack.hpp"

namespace riccilab {

std::string rule_name(ToleranceRule r) { return r == ToleranceRule::Absolute ? "absolute" : "stencil_scaled"; }

double CheckReport::detail(const std::string& key) const {
  for (const auto& [k, v] : details)
    if (k == key) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Catalog

const std::vector<CheckInfo>& catalog() {
  using K = CheckKind;
  static const std::vector<CheckInfo> entries{
      {"lemma_2_1_i", "d/dt div(h)_i = Delta div(h)_i + 2 h_pq nabla_i R_pq - ...", K::PlainPointwise, 1e-6, 3, true, 6},
      {"lemma_2_1_ii", "d/dt [div(div(h)) + Rc.h]", K::PlainPointwise, 1e-6, 4, true, 6},
      {"lemma_2_2", "h~_i0 = g~^jk nabla~_j h~_ki", K::PlainPointwise, 1e-8, 2, true, 4},
      {"prop_2_3_eq_2_4", "nabla~_0 h~_ij = Delta~ h~_ij + 2 h~_pq R~_pij^q", K::PlainPointwise, 1e-6, 4, true, 6},
      {"prop_2_3_eq_2_5", "d/dt h~_ij = Delta~ h~_ij + 2 h~_pq R~_pij^q - R~_iq h~_qj - R~_jq h~_qi",
       K::PlainPointwise, 1e-6, 4, true, 6},
      {"curvext_B4", "R~_p0i^q = nabla_i R_p^q - nabla^q R_pi", K::PlainPointwise, 1e-8, 3, false, 6},
      {"curvext_B5", "R~_p00^q = Delta R_p^q - 1/2 nabla_p nabla^q R + 2 R_pij^q R_ij - R_pr R_rq", K::PlainPointwise,
       1e-6, 4, false, 6},
      {"compat", "nabla~_i g~^jk ... = 0", K::Pointwise, 1e-8, 3, false, 4},
      {"theorem_3_1_eq_3_3", "satisfy the system: d/dt g~^ij = g~^ik g~^jl (2 R~_kl - nabla~_k V~_l - nabla~_l V~_k)",
       K::Pointwise, 1e-8, 2, false, 4},
      {"theorem_3_1_eq_3_4", "satisfy the system: d/dt Gamma~^k_ij = -nabla~_i (R~_j^k - ...) - ... + nabla~^k (...)",
       K::Pointwise, 1e-6, 5, false, 6},
      {"lemma_3_2_eq_3_5", "R~_j0 - 1/2 nabla~_j V~_0 - 1/2 nabla~_0 V~_j = 1/2 nabla_j (R + |V|^2 - h) - 1/2 d/dt V_j",
       K::Pointwise, 1e-6, 3, false, 6},
      {"lemma_3_2_eq_3_6", "R~_00 - nabla~_0 V~_0 = 1/2 d/dt (R + |V|^2 - 2h)", K::Pointwise, 1e-6, 4, false, 6},
      {"lemma_4_1_ii", "h_ij(t,0) = d/ds g_ij(t,0)", K::Family, 1e-8, 0, true, 2},
      {"theorem_4_2_metric", "d/ds g~^ij = -g~^ik g~^jl h~_kl", K::Family, 1e-8, 0, true, 2},
      {"theorem_4_2_connection", "d/ds Gamma~^k_ij = 1/2 g~^kl (nabla~_i h~_jl + nabla~_j h~_il - nabla~_l h~_ij)",
       K::Family, 1e-6, 4, true, 6},
      {"eq_4_3", "(div(h)_k - 1/2 nabla_k H)", K::Family, 1e-8, 1, true, 4},
      {"eq_4_4", "div(div(h)) - Delta H - Rc.h", K::Family, 1e-6, 2, true, 4},
      {"eq_4_5", "d/dt H = Delta H + 2 Rc.h", K::PlainPointwise, 1e-8, 2, true, 4},
      {"theorem_5_1", "On M x [0,T] x {0}: d/ds (-2 R~_ij + nabla~_i W~_j + nabla~_j W~_i) = Delta~_L h~_ij",
       K::Family, 1e-6, 4, true, 6},
      {"eq_5_2", "= div(div(h)) - 1/2 Delta H", K::Family, 1e-6, 2, true, 4},
      {"eq_5_6", "for all i, j >= 0 and k >= 1", K::Family, 1e-6, 6, true, 6},
      {"theorem_C", "Q = g~^ip R~_pj^l T_i^j T_l^k", K::PlainPointwise, 1e-8, 4, false, 6},
      {"harnack_specialization", "taking h = Rc, we obtain", K::PlainPointwise, 1e-8, 4, false, 6},
      {"harnack_positivity_sphere", "d/dt (tR) >= 0", K::Special, 1e-9, 2, false, 4},
      {"lemma_6_1", "Christoffel symbols of g^: closed form = generic formula", K::Pointwise, 1e-9, 3, false, 4},
      {"lemma_6_2_slopes", "O(1/N)", K::Special, 0.1, 4, false, 6},
      {"lemma_6_3", "d/ds g^_ij = h~_ij", K::Family, 1e-6, 2, true, 4},
      {"lemma_6_4", "d/dt g^_ij = -2 R~_ij + nabla~_i W~_j + nabla~_j W~_i + o(s)", K::Family, 1e-6, 4, true, 6},
  };
  return entries;
}

const CheckInfo& check_info(const std::string& id) {
  for (const CheckInfo& c : catalog())
    if (c.id == id) return c;
  throw UnknownCheck("no check named '" + id + "'");
}

std::vector<std::string> catalog_ids() {
  std::vector<std::string> out;
  for (const CheckInfo& c : catalog()) out.push_back(c.id);
  return out;
}

namespace {

const std::vector<std::string> kClosed{"flat", "flat3", "sphere2", "sphere3", "cigar", "s2xs1"};
const std::vector<std::string> kScaling{"flat", "flat3", "sphere2", "sphere3", "s2xs1"};

bool in(const std::vector<std::string>& list, const std::string& s) {
  return std::find(list.begin(), list.end(), s) != list.end();
}

bool is_pulled(const std::string& p) { return p.rfind("pulled_", 0) == 0 && in(kClosed, p.substr(7)); }

std::vector<std::string> pulled_names() {
  std::vector<std::string> out;
  for (const std::string& c : kClosed) out.push_back("pulled_" + c);
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::vector<std::string> known_providers() { return concat(concat(kClosed, pulled_names()), {"grid"}); }

bool applicable(const CheckInfo& info, const std::string& provider) {
  const bool closed = in(kClosed, provider), pulled = is_pulled(provider), grid = provider == "grid";
  if (info.id == "harnack_positivity_sphere") return provider == "sphere2" || provider == "sphere3";
  if (info.id == "lemma_6_2_slopes") return closed || pulled;
  switch (info.kind) {
    case CheckKind::Pointwise: return closed || pulled || grid;
    case CheckKind::PlainPointwise: return closed || grid;
    case CheckKind::Family: return in(kScaling, provider) || grid;
    case CheckKind::Special: return false;
  }
  return false;
}

std::vector<std::string> default_providers(const CheckInfo& info) {
  if (info.id == "harnack_positivity_sphere") return {"sphere2", "sphere3"};
  if (info.id == "lemma_6_2_slopes") return {"sphere2", "cigar", "pulled_cigar"};
  if (info.id == "lemma_6_1") return {"sphere2", "cigar", "pulled_sphere3", "pulled_cigar", "pulled_s2xs1", "grid"};
  switch (info.kind) {
    case CheckKind::Pointwise: return known_providers();
    case CheckKind::PlainPointwise: return concat(kClosed, {"grid"});
    case CheckKind::Family: return concat(kScaling, {"grid"});
    case CheckKind::Special: break;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Grid context

void GridSetup::validate() const {
  if (resolution < 8 || resolution > 256) throw ConfigInvalid("grid.resolution must be in [8, 256]");
  if (accuracy < 0 || accuracy > 8 || accuracy % 2 != 0)
    throw ConfigInvalid("grid.accuracy must be 0 (spectral) or an even order up to 8");
  if (!(amplitude > 0.0 && amplitude < 0.5)) throw ConfigInvalid("grid.amplitude must be in (0, 0.5)");
  if (!(h_amplitude > 0.0 && h_amplitude <= 10.0)) throw ConfigInvalid("grid.h_amplitude must be in (0, 10]");
  if (!(horizon > 0.0 && horizon <= 1.0)) throw ConfigInvalid("grid.horizon must be in (0, 1]");
  if (!(s0 > 0.0 && s0 < 0.1)) throw ConfigInvalid("grid.s0 must be in (0, 0.1)");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigInvalid("grid.cfl must be in (0, 1]");
  Grid g;
  g.n = 2;
  g.resolution = resolution;
  g.accuracy = accuracy;
  g.validate();
  if (!initial.empty()) grid_initial_state(*this, false);
}

GridState grid_initial_state(const GridSetup& setup, bool with_h) {
  GridState s;
  s.grid.n = 2;
  s.grid.resolution = setup.resolution;
  s.grid.accuracy = setup.accuracy;
  if (setup.initial.empty()) {
    s.g = perturbed_flat_metric(s.grid, setup.amplitude, setup.seed);
  } else {
    Grid file;
    FlowSnapshot snap = read_snapshot(setup.initial, &file);
    if (file.n != 2 || file.resolution != setup.resolution || file.length != s.grid.length)
      throw ConfigInvalid("grid.initial: " + setup.initial + " must be a 2-D grid of period 2 pi at resolution " +
                          std::to_string(setup.resolution));
    s.g = std::move(snap.g);
    if (with_h && snap.h) s.h = std::move(*snap.h);
  }
  if (with_h && !s.h) s.h = random_symmetric_field(s.grid, setup.h_amplitude, setup.seed + 1);
  return s;
}

Context::Context(GridSetup setup) : setup_(setup) { setup_.validate(); }

Grid Context::grid() const {
  Grid g;
  g.n = 2;
  g.resolution = setup_.resolution;
  g.accuracy = setup_.accuracy;
  return g;
}

std::shared_ptr<const GridTrajectory> Context::base() {
  std::lock_guard lock(mutex_);
  if (!base_) {
    base_ = std::make_shared<const GridTrajectory>(
        integrate_flow(grid_initial_state(setup_, true), setup_.horizon, StepOptions{setup_.cfl}));
  }
  return base_;
}

std::shared_ptr<const GridTrajectory> Context::family(int halvings) {
  if (halvings != 0 && halvings != 1) throw ConfigInvalid("family halvings must be 0 or 1");
  const auto b = base();
  std::lock_guard lock(mutex_);
  auto& slot = families_[halvings];
  if (!slot)
    slot = std::make_shared<const GridTrajectory>(
        build_deturck_family(*b, setup_.s0 / (1 << halvings), StepOptions{setup_.cfl}));
  return slot;
}

// ---------------------------------------------------------------------------
// Tolerances

namespace {
constexpr double kWavenumber = 1.4142135623730951;  // largest |k| in the grid initial data
}

double tolerance_budget(const CheckInfo& info, const std::string& provider, const GridSetup& setup) {
  if (provider != "grid") return info.analytic_tolerance;
  const double dx = Grid{}.length / setup.resolution;
  const double amp = info.linear_in_h ? setup.h_amplitude : setup.amplitude;
  const double space = setup.accuracy == 0
                           ? 1e-10
                           : std::pow(kWavenumber, setup.accuracy + info.depth) * std::pow(dx, setup.accuracy);
  // upper bound for the step chosen by the integrator
  const double dt = setup.cfl * dx * dx * (1.0 + setup.amplitude);
  const double time = std::pow(kWavenumber, info.depth + 6) * dt * dt;
  double tol = 10.0 * amp * (space + time);
  if (info.kind == CheckKind::Family) {
    const double s = setup.h_amplitude * setup.s0;
    tol += 10.0 * std::pow(kWavenumber, info.depth) * s * s;
  }
  return std::max(tol, info.analytic_tolerance);
}

// ---------------------------------------------------------------------------
// Helpers shared by the checks

namespace {

std::uint64_t pulled_seed(const std::string& base) {
  return 101 + static_cast<std::uint64_t>(std::find(kClosed.begin(), kClosed.end(), base) - kClosed.begin());
}

struct Target {
  std::string name;
  ProviderPtr provider;
  std::array<FamilyPtr, 2> family;  // [1] only on the grid (half step in s)
  bool grid = false;
};

Target resolve(const CheckInfo& info, const std::string& name, Context& ctx) {
  Target t;
  t.name = name;
  if (name == "grid") {
    t.grid = true;
    t.provider = make_grid_provider(ctx.base(), "grid");
    if (info.kind == CheckKind::Family) {
      t.family[0] = make_grid_family(ctx.family(0));
      t.family[1] = make_grid_family(ctx.family(1));
    }
  } else if (is_pulled(name)) {
    const std::string base = name.substr(7);
    t.provider = make_pulled_back(provider_from_name(base), pulled_seed(base));
  } else {
    t.provider = provider_from_name(name);
    if (info.kind == CheckKind::Family) t.family[0] = make_scaling_family(t.provider, ctx.setup().s0);
  }
  return t;
}

TensorJ raise2(const TensorJ& t, const TensorJ& cometric) {
  return raise_index(raise_index(t, cometric, 0), cometric, 1);
}

double max_diff(const TensorJ& a, const TensorJ& b) { return max_abs(values(difference(a, b))); }

Jet scalar_laplacian(const SpaceTimePoint& s, const Jet& f) {
  return laplacian(s.jet, s.conn, TensorJ(s.jet.dim(), 0, f))[0];
}

CotensorJet scaling_variation(const MetricJet& jet, const CotensorJet& rc) {
  const JetSpace& space = jet.space();
  const Jet t = Jet::variable(space, kMaxJetOrder, space.time_var(), jet.point.time);
  TensorJ h(jet.dim(), 2, Jet());
  for (std::size_t c = 0; c < h.size(); ++c) h[c] = (jet.g[c] + 2.0 * t * rc[c]).truncated(jet.order);
  return h;
}

// (n+1)-dimensional 1-form (v0, v).
TensorJ extend_one_form(const CotensorJet& v, const Jet& v0) {
  const int n = v.dim();
  TensorJ out(n + 1, 1, v0);
  for (int i = 0; i < n; ++i) out(i + 1) = v(i);
  return out;
}

TensorJ symmetrized(const TensorJ& t) {
  TensorJ out = t;
  for (int i = 0; i < t.dim(); ++i)
    for (int j = 0; j < t.dim(); ++j) out(i, j) = t(i, j) + t(j, i);
  return out;
}

class Run {
 public:
  Run(const CheckInfo& info, const CheckSpec& spec, const Target& target, Context& ctx)
      : info(info), spec(spec), target(target), ctx(ctx), rng(spec.seed, spec.id + "@" + target.name) {}

  const CheckInfo& info;
  const CheckSpec& spec;
  const Target& target;
  Context& ctx;
  CounterRng rng;

  int n_points = 0;
  double max_residual = 0.0;
  double sum = 0.0;
  std::vector<std::pair<std::string, double>> details;

  int samples(int analytic, int grid) const { return spec.samples > 0 ? spec.samples : (target.grid ? grid : analytic); }
  int frames(int fallback) const { return spec.frames > 0 ? spec.frames : fallback; }

  void add(double r) {
    ++n_points;
    if (std::isnan(r)) r = std::numeric_limits<double>::infinity();
    max_residual = std::max(max_residual, r);
    sum += r;
  }
  void set(const std::string& key, double v) {
    for (auto& [k, old] : details)
      if (k == key) {
        old = v;
        return;
      }
    details.emplace_back(key, v);
  }
  void keep_max(const std::string& key, double v) {
    for (auto& [k, old] : details)
      if (k == key) {
        old = std::max(old, v);
        return;
      }
    details.emplace_back(key, v);
  }

  const SolutionProvider& provider() const { return *target.provider; }

  ChartPoint sample(double min_time = 0.0) {
    ChartPoint p = provider().sample_point(rng);
    if (!target.grid && p.time < min_time) p.time = min_time;
    return p;
  }
  SpaceTimePoint point(int order, double min_time = 0.0) { return spacetime_point(provider(), sample(min_time), order); }

  /// Solutions of the linearized equation at the point.
  std::vector<CotensorJet> solution_hs(const SpaceTimePoint& s) const {
    const ChartPoint& p = s.jet.point;
    if (target.grid) return {provider().evolved_h_jet(p, s.jet.order)};
    const CotensorJet rc = eval_h_jet(provider(), HFamily::Ricci, p, s.jet.order);
    return {rc, scaling_variation(s.jet, rc)};
  }

  /// The arbitrary time component of V~: zero and two random functions.
  std::vector<Jet> time_scalars(const SpaceTimePoint& s) const {
    const JetSpace& space = s.jet.space();
    std::vector<Jet> out{Jet::constant(space, s.jet.order, 0.0)};
    for (std::uint64_t k = 1; k <= 2; ++k) {
      CounterRng r(spec.seed, 1000 + k);
      out.push_back(RandomField(s.jet.dim(), 0, false, r.next_u64(), 0.5).jet(space, s.jet.order, s.jet.point)[0]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Plain-flow identities

void check_lemma_2_1_i(Run& run) {
  const int count = run.samples(20, 6);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int n = s.jet.dim(), tv = s.jet.space().time_var();
    double worst = 0.0;
    for (const CotensorJet& h : run.solution_hs(s)) {
      const DivergencePack dp = divergence(s.jet, s.conn, s.curv, h);
      const TensorJ lap_div = laplacian(s.jet, s.conn, dp.div);
      const TensorJ h_up = raise2(h, s.jet.g_inv), rc_up = raise2(s.curv.ricci, s.jet.g_inv);
      const TensorJ dh = cov_deriv(s.conn, h);
      for (int i = 0; i < n; ++i) {
        double rhs = lap_div(i).value();
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            rhs += 2.0 * h_up(p, q).value() * (s.curv.dricci(i, p, q).value() - s.curv.dricci(p, q, i).value()) +
                   2.0 * rc_up(p, q).value() * dh(p, q, i).value();
        for (int q = 0; q < n; ++q) rhs -= s.curv.ricci_mixed(i, q).value() * dp.div(q).value();
        worst = std::max(worst, std::abs(dp.div(i).d(tv).value() - rhs));
      }
    }
    run.add(worst);
  }
}

void check_lemma_2_1_ii(Run& run) {
  const int count = run.samples(20, 6);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int n = s.jet.dim(), tv = s.jet.space().time_var();
    const TensorJ rc_up = raise2(s.curv.ricci, s.jet.g_inv);
    double worst = 0.0;
    for (const CotensorJet& h : run.solution_hs(s)) {
      const DivergencePack dp = divergence(s.jet, s.conn, s.curv, h);
      const Jet F = dp.div_div + dp.rc_dot_h;
      const TensorJ ddiv = cov_deriv(s.conn, dp.div);  // (j, i)
      const TensorJ h_up = raise2(h, s.jet.g_inv);
      double rhs = scalar_laplacian(s, F).value();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rhs += 4.0 * rc_up(i, j).value() * ddiv(j, i).value();
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          double m = s.curv.lap_ricci(p, q).value() - 0.5 * s.curv.d2scalar(p, q).value();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m += 2.0 * s.curv.riem_low(p, i, j, q).value() * rc_up(i, j).value();
          rhs += 2.0 * h_up(p, q).value() * m;
        }
      worst = std::max(worst, std::abs(F.d(tv).value() - rhs));
    }
    run.add(worst);
  }
}

void check_lemma_2_2(Run& run) {
  const int count = run.samples(30, 8);
  const RandomField field(run.provider().dim(), 2, true, CounterRng(run.spec.seed, 22).next_u64());
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const CotensorJet h = field.jet(s.jet.space(), run.info.order, s.jet.point);
    run.add(time_row_residual(extend_h(s.jet, s.conn, s.curv, h), s.stc, s.gt));
  }
}

void check_eq_2_4(Run& run) {
  const int count = run.samples(20, 6);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int d = s.jet.dim() + 1;
    double worst = 0.0;
    for (const CotensorJet& h : run.solution_hs(s)) {
      const TensorJ ht = extend_h(s.jet, s.conn, s.curv, h);
      const TensorJ dht = st_cov_deriv(s.stc, ht);
      const TensorJ lap = st_laplacian(s.stc, s.gt, ht);
      const TensorJ mixed = raise_index(ht, s.gt.gt_inv, 0);  // h~^p_q
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double rhs = lap(i, j).value();
          for (int p = 1; p < d; ++p)
            for (int q = 0; q < d; ++q) rhs += 2.0 * s.stcurv.riem(p, i, j, q).value() * mixed(p, q).value();
          worst = std::max(worst, std::abs(dht(0, i, j).value() - rhs));
        }
    }
    run.add(worst);
  }
}

void check_eq_2_5(Run& run) {
  const int count = run.samples(20, 6);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int tv = s.jet.space().time_var();
    double worst = 0.0;
    for (const CotensorJet& h : run.solution_hs(s)) {
      const TensorJ ht = extend_h(s.jet, s.conn, s.curv, h);
      const TensorJ rhs = st_lichnerowicz(ht, s.stc, s.stcurv, s.gt);
      for (std::size_t c = 0; c < ht.size(); ++c)
        worst = std::max(worst, std::abs(ht[c].d(tv).value() - rhs[c].value()));
    }
    run.add(worst);
  }
}

// Also folds in the divergence forms R~_ij0^l = g~^pq nabla~_p R~_ijq^l.
void check_curvext_b4(Run& run) {
  const int count = run.samples(20, 6);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int n = s.jet.dim(), d = n + 1;
    const TensorJ& gi = s.jet.g_inv;
    double worst = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int i = 0; i < n; ++i) {
          double expect = 0.0;
          for (int a = 0; a < n; ++a)
            expect += gi(q, a).value() * (s.curv.dricci(i, p, a).value() - s.curv.dricci(a, p, i).value());
          worst = std::max(worst, std::abs(s.stcurv.riem(p + 1, 0, i + 1, q + 1).value() - expect));
        }
    const TensorJ drm = st_spatial_cov_deriv(s.stc, s.stcurv.riem, 0b1000u);  // (a, i, j, k, l)
    double divergence_form = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
          double sum = 0.0;
          for (int a = 1; a < d; ++a)
            for (int b = 1; b < d; ++b) sum += s.gt.gt_inv(a, b).value() * drm(a, i, j, b, l).value();
          divergence_form = std::max(divergence_form, std::abs(s.stcurv.riem(i, j, 0, l).value() - sum));
        }
    run.keep_max("divergence_form", divergence_form);
    run.add(std::max(worst, divergence_form));
  }
}

// Also folds in R~_i0 = g~^jk nabla~_j R~_ki.
void check_curvext_b5(Run& run) {
  const int count = run.samples(20, 6);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int n = s.jet.dim(), d = n + 1;
    const TensorD m = harnack_matrix(s.jet, s.curv);
    const TensorJ& gi = s.jet.g_inv;
    double worst = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        double m_up = 0.0;
        for (int a = 0; a < n; ++a) m_up += gi(q, a).value() * m(p, a);
        worst = std::max(worst, std::abs(s.stcurv.riem(p + 1, 0, 0, q + 1).value() - m_up));
      }
    const TensorJ drc = st_spatial_cov_deriv(s.stc, s.stcurv.ricci);  // (j, k, i)
    double divergence_form = 0.0;
    for (int i = 0; i < d; ++i) {
      double sum = 0.0;
      for (int a = 1; a < d; ++a)
        for (int b = 1; b < d; ++b) sum += s.gt.gt_inv(a, b).value() * drc(a, b, i).value();
      divergence_form = std::max(divergence_form, std::abs(s.stcurv.ricci(i, 0).value() - sum));
    }
    run.keep_max("divergence_form", divergence_form);
    run.add(std::max(worst, divergence_form));
  }
}

void check_eq_4_5(Run& run) {
  const int count = run.samples(30, 8);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    const int tv = s.jet.space().time_var();
    double worst = 0.0;
    for (const CotensorJet& h : run.solution_hs(s)) {
      const DivergencePack dp = divergence(s.jet, s.conn, s.curv, h);
      const double rhs = scalar_laplacian(s, dp.trace).value() + 2.0 * dp.rc_dot_h.value();
      worst = std::max(worst, std::abs(dp.trace.d(tv).value() - rhs));
    }
    run.add(worst);
  }
}

void check_theorem_c(Run& run) {
  const int count = run.samples(20, 6);
  const int per_point = run.frames(20);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    for (int f = 0; f < per_point; ++f) {
      const HarnackFrame frame = random_frame(s.jet.dim(), run.rng, run.spec.frame_scale);
      const QPair q = matrix_Q(s.jet, s.curv, s.stcurv, s.gt, frame);
      run.add(std::abs(q.explicit_form - q.contraction));
    }
  }
}

void check_harnack_specialization(Run& run) {
  const int count = run.samples(20, 6);
  const int per_point = run.frames(20);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order, 0.01);
    const CotensorJet rc = eval_h_jet(run.provider(), HFamily::Ricci, s.jet.point, 4);
    const HarnackPoint hp = harnack_point(s.jet, s.conn, s.curv, rc);
    const double dtr = dt_scalar_under_flow(s.jet, s.curv);
    for (int f = 0; f < per_point; ++f) {
      HarnackFrame frame = random_frame(s.jet.dim(), run.rng, run.spec.frame_scale);
      frame.vt0 = 1.0;
      const double z = linear_trace_Z(hp, frame, true).value;
      const double tq = trace_quadratic(s.jet, s.curv, dtr, frame, s.jet.point.time);
      run.add(std::abs(z - 0.5 * tq));
    }
  }
}

// ---------------------------------------------------------------------------
// Modified-flow identities (any V)

void check_compat(Run& run) {
  const int count = run.samples(30, 8);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    run.add(compat_check(s.gt, s.stc));
  }
}

void record_curl(Run& run, const SpaceTimePoint& s) {
  const int n = s.jet.dim();
  double curl = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) curl = std::max(curl, std::abs(s.v(j).d(i).value() - s.v(i).d(j).value()));
  run.keep_max("curl_V", curl);
}

void check_eq_3_3(Run& run) {
  const int count = run.samples(30, 8);
  for (int k = 0; k < count; ++k) {
    const SpaceTimePoint s = run.point(run.info.order);
    record_curl(run, s);
    const int n = s.jet.dim(), tv = s.jet.space().time_var();
    const TensorJ vt = extend_one_form(s.v, Jet::constant(s.jet.space(), s.jet.order, 0.0));
    const TensorJ dv = st_spatial_cov_deriv(s.stc, vt);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double rhs = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            rhs += s.jet.g_inv(i, a).value() * s.jet.g_inv(j, b).value() *
                   (2.0 * s.stcurv.ricci(a + 1, b + 1).value() - dv(a + 1, b + 1).value() - dv(b + 1, a + 1).value());
        worst = std::max(worst, std::abs(s.jet.g_inv(i, j).d(tv).value() - rhs));
      }
    run.add(worst);
  }
}

// -g~^kl (nabla~_i E_jl + nabla~_j E_il - nabla~_l E_ij), E = R~ - sym nabla~ V~ / 2.
TensorD connection_rhs(const SpaceTimePoint& s, const TensorJ& vt) {
  const int d = s.jet.dim() + 1;
  const TensorJ dv = st_cov_deriv(s.stc, vt);
  TensorJ e = s.stcurv.ricci;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) e(i, j) = s.stcurv.ricci(i, j) - 0.5 * (dv(i, j) + dv(j, i));
  const TensorJ de = st_cov_deriv(s.stc, e);
  TensorD out(d, 3, 0.0);
  for (int k = 1; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double sum = 0.0;
        for (int l = 1; l < d; ++l)
          sum += s.gt.gt_inv(k, l).value() * (-de(i, j, l).value() - de(j, i, l).value() + de(l, i, j).value());
        out(k, i, j) = sum;
      }
  return out;
}

void check_eq_3_4(Run& run) {
  const int count = run.samples(50, 6);
  const int K = run.info.order;
  for (int c = 0; c < count; ++c) {
    const ChartPoint p = run.sample();
    const SpaceTimePoint s = spacetime_point(run.provider(), p, K);
    record_curl(run, s);
    const int d = s.jet.dim() + 1, tv = s.jet.space().time_var();
    TensorD lhs(d, 3, 0.0);
    if (run.target.grid) {
      // time difference between neighbouring snapshots
      const auto traj = run.ctx.base();
      const std::size_t m = traj->snapshot_at(p.time);
      ChartPoint before = p, after = p;
      before.time = traj->snapshots[m - 1].t;
      after.time = traj->snapshots[m + 1].t;
      const SpaceTimePoint sb = spacetime_point(run.provider(), before, K);
      const SpaceTimePoint sa = spacetime_point(run.provider(), after, K);
      const double span = after.time - before.time;
      for (std::size_t f = 0; f < lhs.size(); ++f)
        lhs[f] = (sa.stc.gammat[f].value() - sb.stc.gammat[f].value()) / span;
    } else {
      for (std::size_t f = 0; f < lhs.size(); ++f) lhs[f] = s.stc.gammat[f].d(tv).value();
    }
    double worst = 0.0;
    const std::vector<Jet> scalars = run.time_scalars(s);
    for (std::size_t a = 0; a < scalars.size(); ++a) {
      const TensorD rhs = connection_rhs(s, extend_one_form(s.v, scalars[a]));
      double r = 0.0;
      for (int k = 1; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) r = std::max(r, std::abs(lhs(k, i, j) - rhs(k, i, j)));
      run.keep_max("time_scalar_" + std::to_string(a), r);
      worst = std::max(worst, r);
    }
    run.add(worst);
  }
}

// |V|^2 and the jets of R + |V|^2.
Jet speed_squared(const SpaceTimePoint& s) {
  const int n = s.jet.dim();
  Jet out = Jet::constant(s.jet.space(), s.jet.order, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out += s.jet.g_inv(i, j) * s.v(i) * s.v(j);
  return out;
}

void check_eq_3_5(Run& run) {
  const int count = run.samples(20, 6);
  for (int c = 0; c < count; ++c) {
    const SpaceTimePoint s = run.point(run.info.order);
    record_curl(run, s);
    const int n = s.jet.dim(), tv = s.jet.space().time_var();
    const Jet potential = s.curv.scalar + speed_squared(s);
    double worst = 0.0;
    const std::vector<Jet> scalars = run.time_scalars(s);
    for (std::size_t a = 0; a < scalars.size(); ++a) {
      const TensorJ dv = st_cov_deriv(s.stc, extend_one_form(s.v, scalars[a]));
      double r = 0.0;
      for (int j = 0; j < n; ++j) {
        const double lhs = s.stcurv.ricci(j + 1, 0).value() - 0.5 * dv(j + 1, 0).value() - 0.5 * dv(0, j + 1).value();
        const double rhs = 0.5 * (potential - scalars[a]).d(j).value() - 0.5 * s.v(j).d(tv).value();
        r = std::max(r, std::abs(lhs - rhs));
      }
      run.keep_max("time_scalar_" + std::to_string(a), r);
      worst = std::max(worst, r);
    }
    run.add(worst);
  }
}

void check_eq_3_6(Run& run) {
  const int count = run.samples(20, 6);
  for (int c = 0; c < count; ++c) {
    const SpaceTimePoint s = run.point(run.info.order);
    record_curl(run, s);
    const int tv = s.jet.space().time_var();
    const Jet potential = s.curv.scalar + speed_squared(s);
    double worst = 0.0;
    const std::vector<Jet> scalars = run.time_scalars(s);
    for (std::size_t a = 0; a < scalars.size(); ++a) {
      const TensorJ dv = st_cov_deriv(s.stc, extend_one_form(s.v, scalars[a]));
      const double lhs = s.stcurv.ricci(0, 0).value() - dv(0, 0).value();
      const double rhs = 0.5 * (potential - 2.0 * scalars[a]).d(tv).value();
      const double r = std::abs(lhs - rhs);
      run.keep_max("time_scalar_" + std::to_string(a), r);
      worst = std::max(worst, r);
    }
    run.add(worst);
  }
}

void check_lemma_6_1(Run& run) {
  const int count = run.samples(34, 8);
  const FChoice choices[3] = {FChoice::Zero, FChoice::RandomBump, FChoice::LogDetRatio};
  for (int c = 0; c < count; ++c) {
    const SpaceTimePoint s = run.point(run.info.order);
    for (FChoice fc : choices) {
      const Jet f = make_f(fc, s.jet, run.rng.next_u64());
      // N beyond what keeps D >= 1 at this point
      const double base_d = build_ghat(s.jet, s.curv, s.v, f, 1e8).D.value() - 1e8;
      const double N = std::max(0.0, 1.0 - base_d) + std::exp(run.rng.uniform(std::log(20.0), std::log(1e4)));
      const ApproxMetric am = build_ghat(s.jet, s.curv, s.v, f, N);
      const TensorJ generic = ghat_christoffel_generic(am);
      // relative to the table size: entries grow with N and with |g^-1|
      const double scale = std::max(1.0, max_abs(values(generic)));
      const double r = max_diff(generic, ghat_christoffel_closed(am, s.conn, s.curv)) / scale;
      run.keep_max("table_scale", scale);
      run.keep_max("f_" + fchoice_name(fc), r);
      run.add(r);
    }
  }
}

void check_lemma_6_2(Run& run) {
  const int count = run.samples(3, 3);
  std::vector<SpaceTimePoint> points;
  std::vector<Jet> fs;
  for (int c = 0; c < count; ++c) {
    points.push_back(run.point(run.info.order));
    fs.push_back(make_f(FChoice::RandomBump, points.back().jet, run.rng.next_u64()));
  }
  const ConvergenceReport rep = convergence_study(points, fs);
  double worst = 0.0;
  for (const SlopeFit& fit : rep.fits) {
    if (fit.exact) {
      run.set("exact_" + fit.quantity, 1.0);
      continue;
    }
    run.set("slope_" + fit.quantity, fit.slope);
    worst = std::max(worst, std::abs(fit.slope + 1.0));
  }
  run.n_points = count;
  run.max_residual = worst;
  run.sum = worst * count;
}

void check_harnack_positivity(Run& run) {
  const SolutionProvider& p = run.provider();
  const int n = p.dim();
  const int count = run.samples(10, 10);
  const int total_frames = run.frames(1000);
  const double times[3] = {0.01, 0.05, 0.1};
  double z_min = std::numeric_limits<double>::infinity();
  for (double t : times) {
    std::vector<HarnackPoint> hps;
    for (int c = 0; c < count; ++c) {
      ChartPoint pt = p.sample_point(run.rng);
      pt.time = t;
      const SpaceTimePoint s = spacetime_point(p, pt, run.info.order);
      hps.push_back(harnack_point(s.jet, s.conn, s.curv, eval_h_jet(p, HFamily::Ricci, pt, run.info.order)));
    }
    for (int f = 0; f < total_frames; ++f) {
      const HarnackFrame frame = random_frame(n, run.rng, run.spec.frame_scale);
      const double z = linear_trace_Z(hps[f % count], frame, true).value;
      z_min = std::min(z_min, z);
      run.add(std::max(0.0, -z));
    }
  }
  run.set("z_min", z_min);

  // tR along the closed form against n(n-1) t / (1 - 2(n-1) t)
  const double t_end = 0.9 * p.sample_t_max();
  const int steps = 40;
  double tr_error = 0.0, previous = -1.0;
  bool increasing = true;
  const ChartPoint origin{std::vector<double>(n, 0.0), 0.0};
  for (int k = 0; k <= steps; ++k) {
    ChartPoint pt = origin;
    pt.time = t_end * k / steps;
    const SpaceTimePoint s = spacetime_point(p, pt, 2);
    const double tr = pt.time * s.curv.scalar.value();
    const double closed = n * (n - 1) * pt.time / (1.0 - 2.0 * (n - 1) * pt.time);
    tr_error = std::max(tr_error, std::abs(tr - closed));
    if (k > 0 && !(tr > previous)) increasing = false;
    previous = tr;
  }
  run.set("tR_error", tr_error);
  run.set("tR_increasing", increasing ? 1.0 : 0.0);
  if (!increasing) run.add(std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------
// Two-parameter families

// Geometry of the family members at one point, built lazily.
class FamilyEval {
 public:
  FamilyEval(FamilyPoint fp, bool four_point, int order)
      : fp_(std::move(fp)), four_point_(four_point), order_(order), n_(fp_.member(0).dim()) {}

  const FamilyPoint& point() const { return fp_; }
  int dim() const { return n_; }
  int time_var() const { return fp_.member(0).space().time_var(); }

  /// Base point with V = 0 and the extended h.
  const SpaceTimePoint& base() {
    if (!base_) base_ = spacetime_point(fp_.member(0), zero_form());
    return *base_;
  }
  const TensorJ& ht() {
    if (!ht_) ht_ = extend_h(base().jet, base().conn, base().curv, fp_.h);
    return *ht_;
  }

  const CotensorJet& w(int k) {
    auto& slot = w_[k + 2];
    if (!slot) slot = deturck_w(fp_.member(k).g, fp_.member(0).g);
    return *slot;
  }
  /// Space-time structure of member k with V = W.
  const SpaceTimePoint& st(int k) {
    auto& slot = st_[k + 2];
    if (!slot) slot = spacetime_point(fp_.member(k), w(k));
    return *slot;
  }
  const TensorJ& wt(int k) {
    auto& slot = wt_[k + 2];
    if (!slot) slot = build_Wtilde(w(k), st(k).jet, st(k).conn);
    return *slot;
  }
  /// -2 R~ + nabla~ W~ + (nabla~ W~)^T.
  const TensorJ& q(int k) {
    auto& slot = q_[k + 2];
    if (!slot) {
      const SpaceTimePoint& s = st(k);
      const TensorJ dw = st_cov_deriv(s.stc, wt(k));
      TensorJ out = s.stcurv.ricci;
      for (std::size_t c = 0; c < out.size(); ++c) out[c] = -2.0 * s.stcurv.ricci[c];
      const TensorJ sym = symmetrized(dw);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += sym[c];
      slot = out;
    }
    return *slot;
  }
  /// g^ without the constant N.
  const TensorJ& ghat(int k) {
    auto& slot = ghat_[k + 2];
    if (!slot) {
      const MetricJet& jet = fp_.member(k);
      const int tv = time_var();
      const Jet log_ratio = log(determinant(jet.g)) - log(determinant(fp_.member(0).g));
      const CurvaturePack& curv = st(k).curv;
      const CotensorJet& wk = w(k);
      Jet wsq = Jet::constant(jet.space(), order_, 0.0);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) wsq += jet.g_inv(i, j) * wk(i) * wk(j);
      TensorJ out(n_ + 1, 2, curv.scalar + wsq + log_ratio.d(tv));
      for (int i = 0; i < n_; ++i) {
        out(0, i + 1) = wk(i) + 0.5 * log_ratio.d(i);
        out(i + 1, 0) = out(0, i + 1);
        for (int j = 0; j < n_; ++j) out(i + 1, j + 1) = jet.g(i, j);
      }
      slot = out;
    }
    return *slot;
  }

  /// d/ds at s = 0 by central differences over the members.
  TensorJ ds(const std::function<TensorJ(int)>& f) const {
    const double s0 = fp_.s0;
    if (four_point_) {
      const TensorJ m2 = f(-2), m1 = f(-1), p1 = f(1), p2 = f(2);
      TensorJ out = p1;
      for (std::size_t c = 0; c < out.size(); ++c)
        out[c] = (8.0 * (p1[c] - m1[c]) - (p2[c] - m2[c])) * (1.0 / (12.0 * s0));
      return out;
    }
    const TensorJ m1 = f(-1), p1 = f(1);
    TensorJ out = p1;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (p1[c] - m1[c]) * (1.0 / (2.0 * s0));
    return out;
  }

 private:
  CotensorJet zero_form() const {
    return TensorJ(n_, 1, Jet::constant(fp_.member(0).space(), order_, 0.0));
  }

  FamilyPoint fp_;
  bool four_point_;
  int order_;
  int n_;
  std::optional<SpaceTimePoint> base_;
  std::optional<TensorJ> ht_;
  std::array<std::optional<CotensorJet>, 5> w_;
  std::array<std::optional<SpaceTimePoint>, 5> st_;
  std::array<std::optional<TensorJ>, 5> wt_, q_, ghat_;
};

// Residual of one family identity; `primary` is false on the half-step run
// used only for the convergence order.
using FamilyCheck = std::function<double(FamilyEval&, Run&, bool primary)>;

void run_family(Run& run, const FamilyCheck& fn) {
  const Target& t = run.target;
  const int count = run.samples(10, 4);
  double coarse = 0.0, fine = 0.0;
  for (int c = 0; c < count; ++c) {
    const ChartPoint p = t.family[0]->sample_point(run.rng);
    FamilyEval e0(t.family[0]->at(p, run.info.order), !t.grid, run.info.order);
    const double r = fn(e0, run, true);
    run.add(r);
    coarse = std::max(coarse, r);
    if (t.grid) {
      FamilyEval e1(t.family[1]->at(p, run.info.order), false, run.info.order);
      fine = std::max(fine, fn(e1, run, false));
    }
  }
  if (t.grid) {
    run.set("residual_half_s0", fine);
    run.set("s_order", std::log2(coarse / fine));
  }
}

TensorJ scalar(const Jet& f, int dim) { return TensorJ(dim, 0, f); }

double family_lemma_4_1(FamilyEval& e, Run&, bool) {
  const FamilyPoint& fp = e.point();
  return max_diff(e.ds([&](int k) { return fp.member(k).g; }), fp.h);
}

double family_metric(FamilyEval& e, Run&, bool) {
  const FamilyPoint& fp = e.point();
  const TensorJ d = e.ds([&](int k) { return fp.member(k).g_inv; });
  const TensorJ expect = raise2(fp.h, fp.member(0).g_inv);
  double r = 0.0;
  for (std::size_t c = 0; c < d.size(); ++c) r = std::max(r, std::abs(d[c].value() + expect[c].value()));
  return r;
}

double family_connection(FamilyEval& e, Run&, bool) {
  const TensorJ d = e.ds([&](int k) { return e.st(k).stc.gammat; });
  const SpaceTimePoint& b = e.base();
  const TensorJ dh = st_cov_deriv(b.stc, e.ht());
  const int dd = e.dim() + 1;
  double r = 0.0;
  for (int k = 0; k < dd; ++k)
    for (int i = 0; i < dd; ++i)
      for (int j = 0; j < dd; ++j) {
        double expect = 0.0;
        for (int l = 1; l < dd; ++l)
          expect += 0.5 * b.gt.gt_inv(k, l).value() * (dh(i, j, l).value() + dh(j, i, l).value() - dh(l, i, j).value());
        r = std::max(r, std::abs(d(k, i, j).value() - expect));
      }
  return r;
}

double family_eq_4_3(FamilyEval& e, Run&, bool) {
  const SpaceTimePoint& b = e.base();
  const TensorJ d = e.ds([&](int k) { return e.w(k); });
  const DivergencePack dp = divergence(b.jet, b.conn, b.curv, e.point().h);
  double r = 0.0;
  for (int k = 0; k < e.dim(); ++k)
    r = std::max(r, std::abs(d(k).value() - (dp.div(k).value() - 0.5 * dp.trace.d(k).value())));
  return r;
}

double family_eq_4_4(FamilyEval& e, Run&, bool) {
  const SpaceTimePoint& b = e.base();
  const int n = e.dim();
  const TensorJ d = e.ds([&](int k) {
    const MetricJet& jet = e.point().member(k);
    return scalar(curvature(jet, christoffel(jet)).scalar, n);
  });
  const DivergencePack dp = divergence(b.jet, b.conn, b.curv, e.point().h);
  const double expect = dp.div_div.value() - scalar_laplacian(b, dp.trace).value() - dp.rc_dot_h.value();
  return std::abs(d[0].value() - expect);
}

double family_theorem_5_1(FamilyEval& e, Run&, bool) {
  const TensorJ d = e.ds([&](int k) { return e.q(k); });
  const SpaceTimePoint& b = e.base();
  return max_diff(d, st_lichnerowicz(e.ht(), b.stc, b.stcurv, b.gt));
}

double family_eq_5_2(FamilyEval& e, Run& run, bool primary) {
  const SpaceTimePoint& b = e.base();
  const int n = e.dim();
  const TensorJ d = e.ds([&](int k) { return scalar(e.wt(k)(0), n); });
  const DivergencePack dp = divergence(b.jet, b.conn, b.curv, e.point().h);
  const double first = dp.div_div.value() - 0.5 * scalar_laplacian(b, dp.trace).value();
  const TensorJ dh = st_cov_deriv(b.stc, e.ht());
  double second = 0.0;
  for (int p = 1; p <= n; ++p)
    for (int q = 1; q <= n; ++q)
      second += b.gt.gt_inv(p, q).value() * (dh(p, 0, q).value() - 0.5 * dh(0, p, q).value());
  if (primary) run.keep_max("space_time_form", std::abs(first - second));
  return std::max(std::abs(d[0].value() - first), std::abs(d[0].value() - second));
}

double family_eq_5_6(FamilyEval& e, Run& run, bool primary) {
  const TensorJ source = e.ds([&](int k) { return e.q(k); });
  const TensorJ& ht = e.ht();
  const int tv = e.time_var();
  TensorJ x = ht;
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = ht[c].d(tv) - source[c];
  if (primary) run.keep_max("heat_form", max_abs(values(x)));
  const TensorJ dx = st_cov_deriv(e.base().stc, x);
  const int d = e.dim() + 1;
  double r = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 1; k < d; ++k)
        r = std::max(r, std::abs(dx(i, j, k).value() + dx(j, i, k).value() - dx(k, i, j).value()));
  return r;
}

double family_lemma_6_3(FamilyEval& e, Run&, bool) {
  return max_diff(e.ds([&](int k) { return e.ghat(k); }), e.ht());
}

double family_lemma_6_4(FamilyEval& e, Run& run, bool primary) {
  const int tv = e.time_var();
  auto defect = [&](int k) {
    const TensorJ& g = e.ghat(k);
    const TensorJ& q = e.q(k);
    TensorJ out = q;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = g[c].d(tv) - q[c];
    return out;
  };
  if (primary) {
    const TensorJ at_zero = defect(0);
    double spatial = 0.0, mixed = 0.0;
    const int d = e.dim() + 1;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double& slot = (i == 0 || j == 0) ? mixed : spatial;
        slot = std::max(slot, std::abs(at_zero(i, j).value()));
      }
    run.keep_max("literal_s0_spatial", spatial);
    run.keep_max("literal_s0_time", mixed);
  }
  return max_abs(values(e.ds(defect)));
}

// ---------------------------------------------------------------------------

using CheckFn = std::function<void(Run&)>;

const std::map<std::string, CheckFn>& dispatch() {
  auto family = [](FamilyCheck fn) { return [fn](Run& run) { run_family(run, fn); }; };
  static const std::map<std::string, CheckFn> table{
      {"lemma_2_1_i", check_lemma_2_1_i},
      {"lemma_2_1_ii", check_lemma_2_1_ii},
      {"lemma_2_2", check_lemma_2_2},
      {"prop_2_3_eq_2_4", check_eq_2_4},
      {"prop_2_3_eq_2_5", check_eq_2_5},
      {"curvext_B4", check_curvext_b4},
      {"curvext_B5", check_curvext_b5},
      {"compat", check_compat},
      {"theorem_3_1_eq_3_3", check_eq_3_3},
      {"theorem_3_1_eq_3_4", check_eq_3_4},
      {"lemma_3_2_eq_3_5", check_eq_3_5},
      {"lemma_3_2_eq_3_6", check_eq_3_6},
      {"lemma_4_1_ii", family(family_lemma_4_1)},
      {"theorem_4_2_metric", family(family_metric)},
      {"theorem_4_2_connection", family(family_connection)},
      {"eq_4_3", family(family_eq_4_3)},
      {"eq_4_4", family(family_eq_4_4)},
      {"eq_4_5", check_eq_4_5},
      {"theorem_5_1", family(family_theorem_5_1)},
      {"eq_5_2", family(family_eq_5_2)},
      {"eq_5_6", family(family_eq_5_6)},
      {"theorem_C", check_theorem_c},
      {"harnack_specialization", check_harnack_specialization},
      {"harnack_positivity_sphere", check_harnack_positivity},
      {"lemma_6_1", check_lemma_6_1},
      {"lemma_6_2_slopes", check_lemma_6_2},
      {"lemma_6_3", family(family_lemma_6_3)},
      {"lemma_6_4", family(family_lemma_6_4)},
  };
  return table;
}

}  // namespace

CheckReport run_check(const CheckSpec& spec, Context& ctx) {
  const CheckInfo& info = check_info(spec.id);
  if (!in(known_providers(), spec.provider)) throw ProviderUnavailable("unknown provider '" + spec.provider + "'");
  if (!applicable(info, spec.provider))
    throw ProviderUnavailable("check " + spec.id + " does not apply to provider " + spec.provider);

  CheckReport rep;
  rep.id = info.id;
  rep.citation = info.citation;
  rep.provider = spec.provider;
  rep.seed = spec.seed;
  rep.rule = spec.provider == "grid" ? ToleranceRule::StencilScaled : ToleranceRule::Absolute;
  rep.tolerance = spec.tolerance > 0.0 ? spec.tolerance : tolerance_budget(info, spec.provider, ctx.setup());

  const auto start = std::chrono::steady_clock::now();
  try {
    const Target target = resolve(info, spec.provider, ctx);
    Run run(info, spec, target, ctx);
    dispatch().at(info.id)(run);
    rep.n_points = run.n_points;
    rep.max_residual = run.max_residual;
    rep.mean_residual = run.n_points > 0 ? run.sum / run.n_points : 0.0;
    rep.details = std::move(run.details);
    rep.pass = run.n_points > 0 && rep.max_residual <= rep.tolerance;
  } catch (const Error& e) {
    rep.error = e.what();
    rep.pass = false;
  } catch (const std::exception& e) {
    rep.error = std::string("InternalError: ") + e.what();
    rep.pass = false;
  }
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

SuiteResult run_suite(const SuiteRequest& request, Context& ctx) {
  std::vector<CheckSpec> specs;
  std::vector<std::string> unknown;
  for (const std::string& id : request.ids) {
    const CheckInfo* info = nullptr;
    try {
      info = &check_info(id);
    } catch (const UnknownCheck&) {
      CheckSpec s;
      s.id = id;
      specs.push_back(s);
      continue;
    }
    const std::vector<std::string> providers = request.providers.empty() ? default_providers(*info) : request.providers;
    for (const std::string& p : providers) {
      if (!request.providers.empty() && in(known_providers(), p) && !applicable(*info, p)) continue;
      CheckSpec s;
      s.id = id;
      s.provider = p;
      s.samples = request.samples;
      s.seed = request.seed;
      specs.push_back(s);
    }
  }

  SuiteResult result;
  result.reports.resize(specs.size());
  std::optional<mutation::Scope> scope;
  if (request.mutation != mutation::Kind::None) scope.emplace(request.mutation);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      const CheckSpec& s = specs[i];
      try {
        result.reports[i] = run_check(s, ctx);
      } catch (const Error& e) {
        CheckReport& r = result.reports[i];
        r.id = s.id;
        r.provider = s.provider;
        r.seed = s.seed;
        r.error = e.what();
      }
    }
  };
  unsigned threads = request.threads ? request.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, specs.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (const CheckReport& r : result.reports) {
    ++result.summary.total;
    if (!r.error.empty())
      ++result.summary.errored;
    else if (r.pass)
      ++result.summary.passed;
    else
      ++result.summary.failed;
  }
  return result;
}

}  // namespace riccilab
