#include "riccilab/jets.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "riccilab/errors.hpp"
#include "riccilab/riemann.hpp"

namespace riccilab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(const std::vector<double>& x, int count) {
  double s = 0.0;
  for (int i = 0; i < count; ++i) s += x[i] * x[i];
  return s;
}

TensorJ diagonal(const std::vector<Jet>& diag) {
  const int n = static_cast<int>(diag.size());
  const JetSpace& space = diag[0].space();
  const int deg = diag[0].degree();
  TensorJ g(n, 2, Jet(space, deg));
  for (int i = 0; i < n; ++i) g(i, i) = diag[i];
  return g;
}

void check_sym_pd(const TensorJ& g) {
  const int n = g.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(g(i, j).value() - g(j, i).value()) > 1e-12 * (1.0 + std::abs(g(i, j).value())))
        throw NotPositiveDefinite("metric is not symmetric");
  // leading principal minors of the values
  const TensorD v = values(g);
  const double m1 = v(0, 0);
  double m2 = n >= 2 ? v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0) : 1.0;
  double m3 = 1.0;
  if (n >= 3)
    m3 = v(0, 0) * (v(1, 1) * v(2, 2) - v(1, 2) * v(2, 1)) - v(0, 1) * (v(1, 0) * v(2, 2) - v(1, 2) * v(2, 0)) +
         v(0, 2) * (v(1, 0) * v(2, 1) - v(1, 1) * v(2, 0));
  if (!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0)) throw NotPositiveDefinite("metric is not positive-definite");
}

// ---------------------------------------------------------------------------

class FlatTorus final : public SolutionProvider {
 public:
  explicit FlatTorus(int n) : n_(n) {}
  std::string id() const override { return n_ == 2 ? "flat" : "flat" + std::to_string(n_); }
  Family family() const override { return Family::FlatTorus; }
  int dim() const override { return n_; }
  double t_max() const override { return kInf; }
  bool nonnegative_curvature() const override { return true; }
  bool contains(const ChartPoint& p) const override { return p.time >= 0.0; }
  double sample_t_max() const override { return 1.0; }
  ChartPoint sample_point(CounterRng& rng) const override {
    ChartPoint p;
    for (int i = 0; i < n_; ++i) p.coords.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    p.time = rng.uniform(0.0, sample_t_max());
    return p;
  }
  TensorJ metric_at(const std::vector<Jet>& x, const Jet&) const override {
    std::vector<Jet> d(n_, Jet::constant(x[0].space(), x[0].degree(), 1.0));
    return diagonal(d);
  }

 private:
  int n_;
};

class RoundSphere final : public SolutionProvider {
 public:
  RoundSphere(int n, double r0) : n_(n), r0_(r0) {}
  std::string id() const override { return "sphere" + std::to_string(n_); }
  Family family() const override { return Family::RoundSphereShrinker; }
  int dim() const override { return n_; }
  double t_max() const override { return r0_ * r0_ / (2.0 * (n_ - 1)); }
  bool nonnegative_curvature() const override { return true; }
  bool contains(const ChartPoint& p) const override {
    return p.time >= 0.0 && p.time < t_max() && norm2(p.coords, n_) <= 100.0;
  }
  double sample_t_max() const override { return 0.4 * t_max(); }
  ChartPoint sample_point(CounterRng& rng) const override {
    ChartPoint p;
    do {
      p.coords.clear();
      for (int i = 0; i < n_; ++i) p.coords.push_back(rng.uniform(-3.0, 3.0));
    } while (norm2(p.coords, n_) > 9.0);
    p.time = rng.uniform(0.0, sample_t_max());
    return p;
  }
  TensorJ metric_at(const std::vector<Jet>& x, const Jet& t) const override {
    Jet rho = 1.0 + x[0] * x[0];
    for (int i = 1; i < n_; ++i) rho += x[i] * x[i];
    const Jet r2 = (r0_ * r0_) - 2.0 * (n_ - 1) * t;
    const Jet c = 4.0 * r2 / (rho * rho);
    return diagonal(std::vector<Jet>(n_, c));
  }

 private:
  int n_;
  double r0_;
};

class Cigar final : public SolutionProvider {
 public:
  std::string id() const override { return "cigar"; }
  Family family() const override { return Family::CigarSoliton; }
  int dim() const override { return 2; }
  double t_max() const override { return kInf; }
  bool nonnegative_curvature() const override { return true; }
  bool contains(const ChartPoint& p) const override { return p.time >= 0.0; }
  double sample_t_max() const override { return 0.5; }
  ChartPoint sample_point(CounterRng& rng) const override {
    ChartPoint p;
    p.coords = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    p.time = rng.uniform(0.0, sample_t_max());
    return p;
  }
  TensorJ metric_at(const std::vector<Jet>& x, const Jet& t) const override {
    const Jet c = 1.0 / (exp(4.0 * t) + x[0] * x[0] + x[1] * x[1]);
    return diagonal({c, c});
  }
};

class SphereCrossFlat final : public SolutionProvider {
 public:
  explicit SphereCrossFlat(double r0) : r0_(r0) {}
  std::string id() const override { return "s2xs1"; }
  Family family() const override { return Family::SphereCrossFlat; }
  int dim() const override { return 3; }
  double t_max() const override { return r0_ * r0_ / 2.0; }
  bool nonnegative_curvature() const override { return true; }
  bool contains(const ChartPoint& p) const override {
    return p.time >= 0.0 && p.time < t_max() && norm2(p.coords, 2) <= 100.0;
  }
  double sample_t_max() const override { return 0.4 * t_max(); }
  ChartPoint sample_point(CounterRng& rng) const override {
    ChartPoint p;
    do {
      p.coords = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    } while (norm2(p.coords, 2) > 9.0);
    p.coords.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    p.time = rng.uniform(0.0, sample_t_max());
    return p;
  }
  TensorJ metric_at(const std::vector<Jet>& x, const Jet& t) const override {
    const Jet rho = 1.0 + x[0] * x[0] + x[1] * x[1];
    const Jet r2 = (r0_ * r0_) - 2.0 * t;
    const Jet c = 4.0 * r2 / (rho * rho);
    return diagonal({c, c, Jet::constant(c.space(), c.degree(), 1.0)});
  }

 private:
  double r0_;
};

// Smooth displacement field sum_m a_m sin(k_m . x + theta_m), per component.
class TrigVectorField {
 public:
  TrigVectorField(int n, CounterRng rng, double amplitude, int modes) : n_(n) {
    for (int a = 0; a < n; ++a) {
      std::vector<Term> terms;
      for (int m = 0; m < modes; ++m) {
        Term term;
        for (int i = 0; i < n; ++i) term.k.push_back(static_cast<double>(rng.integer(-1, 1)) + rng.uniform(-0.25, 0.25));
        term.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        term.amp = amplitude * rng.uniform(-1.0, 1.0) / modes;
        terms.push_back(std::move(term));
      }
      comps_.push_back(std::move(terms));
    }
  }
  std::vector<Jet> at(const std::vector<Jet>& x) const {
    std::vector<Jet> out;
    for (int a = 0; a < n_; ++a) {
      Jet acc = Jet::constant(x[0].space(), x[0].degree(), 0.0);
      for (const Term& term : comps_[a]) {
        Jet arg = term.k[0] * x[0] + term.phase;
        for (int i = 1; i < n_; ++i) arg += term.k[i] * x[i];
        acc += term.amp * sin(arg);
      }
      out.push_back(acc);
    }
    return out;
  }

 private:
  struct Term {
    std::vector<double> k;
    double phase = 0.0;
    double amp = 0.0;
  };
  int n_;
  std::vector<std::vector<Term>> comps_;
};

class PulledBack final : public SolutionProvider {
 public:
  PulledBack(ProviderPtr base, std::uint64_t seed, double amplitude)
      : base_(std::move(base)),
        seed_(seed),
        first_(base_->dim(), CounterRng(seed, 1), amplitude, 2),
        second_(base_->dim(), CounterRng(seed, 2), amplitude, 2) {}

  std::string id() const override { return base_->id() + "_pulled_" + std::to_string(seed_); }
  Family family() const override { return Family::PulledBack; }
  int dim() const override { return base_->dim(); }
  double t_max() const override { return base_->t_max(); }
  bool nonnegative_curvature() const override { return base_->nonnegative_curvature(); }
  bool contains(const ChartPoint& p) const override { return base_->contains(p); }
  double sample_t_max() const override { return base_->sample_t_max(); }
  ChartPoint sample_point(CounterRng& rng) const override { return base_->sample_point(rng); }

  TensorJ metric_at(const std::vector<Jet>& x, const Jet& t) const override {
    return pulled(x, t).first;
  }

  MetricJet metric_jet(const ChartPoint& p, int order) const override {
    require_inside(p);
    const auto x = coordinate_jets(jet_space(dim()), order + 1, p);
    const Jet t = Jet::variable(jet_space(dim()), order + 1, dim(), p.time);
    TensorJ g = pulled(x, t).first;
    for (Jet& c : g) c = c.truncated(order);
    return make_metric_jet(p, order, std::move(g));
  }

  CotensorJet shift_jet(const ChartPoint& p, int order) const override {
    require_inside(p);
    const auto x = coordinate_jets(jet_space(dim()), order + 2, p);
    const Jet t = Jet::variable(jet_space(dim()), order + 2, dim(), p.time);
    TensorJ v = pulled(x, t).second;
    for (Jet& c : v) c = c.truncated(order);
    return v;
  }

 private:
  // phi = x + t A(x) + t^2 B(x) / 2; returns (phi^* g, V) with
  // V_i = gbar_ij X^j and X = (D phi)^{-1} d phi / dt.
  std::pair<TensorJ, TensorJ> pulled(const std::vector<Jet>& x, const Jet& t) const {
    const int n = dim();
    const auto a = first_.at(x);
    const auto b = second_.at(x);
    std::vector<Jet> phi;
    for (int i = 0; i < n; ++i) phi.push_back(x[i] + t * a[i] + 0.5 * (t * t) * b[i]);
    TensorJ jac(n, 2, Jet());  // jac(a, i) = d phi^a / d x^i
    for (int c = 0; c < n; ++c)
      for (int i = 0; i < n; ++i) jac(c, i) = phi[c].d(i);
    const TensorJ gb = base_->metric_at(phi, t);
    TensorJ g(n, 2, Jet());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet acc = jac(0, i) * gb(0, 0) * jac(0, j);
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d)
            if (c + d > 0) acc += jac(c, i) * gb(c, d) * jac(d, j);
        g(i, j) = acc;
      }
    const TensorJ jinv = inverse(jac, 0.0);
    std::vector<Jet> dphi;
    for (int i = 0; i < n; ++i) dphi.push_back(phi[i].d(n));
    TensorJ v(n, 1, Jet());
    std::vector<Jet> xv(n);
    for (int i = 0; i < n; ++i) {
      xv[i] = jinv(i, 0) * dphi[0];
      for (int c = 1; c < n; ++c) xv[i] += jinv(i, c) * dphi[c];
    }
    for (int i = 0; i < n; ++i) {
      Jet acc = g(i, 0) * xv[0];
      for (int j = 1; j < n; ++j) acc += g(i, j) * xv[j];
      v(i) = acc;
    }
    return {g, v};
  }

  ProviderPtr base_;
  std::uint64_t seed_;
  TrigVectorField first_;
  TrigVectorField second_;
};

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::FlatTorus: return "flat_torus";
    case Family::RoundSphereShrinker: return "round_sphere_shrinker";
    case Family::CigarSoliton: return "cigar_soliton";
    case Family::SphereCrossFlat: return "sphere_cross_flat";
    case Family::GridNumeric: return "grid_numeric";
    case Family::PulledBack: return "pulled_back";
  }
  return "unknown";
}

const JetSpace& jet_space(int n) { return JetSpace::get(n, kMaxJetOrder); }

void SolutionProvider::require_inside(const ChartPoint& p) const {
  if (static_cast<int>(p.coords.size()) != dim())
    throw PointOutOfChart(id() + ": point has " + std::to_string(p.coords.size()) + " coordinates, expected " +
                          std::to_string(dim()));
  if (!contains(p))
    throw PointOutOfChart(id() + ": point outside chart or time interval (t = " + std::to_string(p.time) + ")");
}

MetricJet SolutionProvider::metric_jet(const ChartPoint& p, int order) const {
  require_inside(p);
  const auto x = coordinate_jets(jet_space(dim()), order, p);
  const Jet t = Jet::variable(jet_space(dim()), order, dim(), p.time);
  return make_metric_jet(p, order, metric_at(x, t));
}

CotensorJet SolutionProvider::shift_jet(const ChartPoint& p, int order) const {
  require_inside(p);
  return zero_tensor(jet_space(dim()), order, dim(), 1);
}

CotensorJet SolutionProvider::evolved_h_jet(const ChartPoint&, int) const {
  throw ProviderUnavailable(id() + " carries no evolved h field");
}

std::vector<Jet> coordinate_jets(const JetSpace& space, int order, const ChartPoint& p) {
  std::vector<Jet> x;
  for (int i = 0; i < space.nx(); ++i) x.push_back(Jet::variable(space, order, i, p.coords[i]));
  return x;
}

MetricJet make_metric_jet(const ChartPoint& p, int order, TensorJ g) {
  check_sym_pd(g);
  MetricJet m;
  m.point = p;
  m.order = order;
  m.g_inv = inverse(g);
  m.g = std::move(g);
  return m;
}

MetricJet eval_metric_jet(const SolutionProvider& provider, const ChartPoint& p, int order) {
  if (order < 0 || order > kMaxProviderOrder)
    throw OrderUnsupported("jet order " + std::to_string(order) + " outside [0, " +
                           std::to_string(kMaxProviderOrder) + "]");
  return provider.metric_jet(p, order);
}

CotensorJet eval_h_jet(const SolutionProvider& provider, HFamily family, const ChartPoint& p, int order) {
  if (family == HFamily::GridEvolved) return provider.evolved_h_jet(p, order);
  const MetricJet jet = eval_metric_jet(provider, p, order + 2);
  const SpatialConnection conn = christoffel(jet);
  const TensorJ gamma = conn.gamma;
  TensorJ ric = ricci_from_riemann(riemann_from_connection(gamma, conn.chart));
  for (Jet& c : ric) c = c.truncated(order);
  return ric;
}

ProviderPtr make_flat_torus(int n) { return std::make_shared<FlatTorus>(n); }
ProviderPtr make_round_sphere(int n, double r0) {
  if (n < 2 || n > 3) throw OrderUnsupported("sphere dimension " + std::to_string(n));
  return std::make_shared<RoundSphere>(n, r0);
}
ProviderPtr make_cigar() { return std::make_shared<Cigar>(); }
ProviderPtr make_sphere_cross_flat(double r0) { return std::make_shared<SphereCrossFlat>(r0); }
ProviderPtr make_pulled_back(ProviderPtr base, std::uint64_t seed, double amplitude) {
  return std::make_shared<PulledBack>(std::move(base), seed, amplitude);
}

ProviderPtr provider_from_name(const std::string& name) {
  if (name == "flat") return make_flat_torus(2);
  if (name == "flat3") return make_flat_torus(3);
  if (name == "sphere2") return make_round_sphere(2, 1.0);
  if (name == "sphere3") return make_round_sphere(3, 1.0);
  if (name == "cigar") return make_cigar();
  if (name == "s2xs1") return make_sphere_cross_flat(1.0);
  throw ProviderUnavailable("unknown provider '" + name + "'");
}

std::vector<std::string> closed_form_provider_names() { return {"flat", "flat3", "sphere2", "sphere3", "cigar", "s2xs1"}; }

RandomField::RandomField(int n, int rank, bool symmetric, std::uint64_t seed, double amplitude, int modes)
    : n_(n), rank_(rank), symmetric_(symmetric) {
  CounterRng rng(seed, "random_field");
  std::size_t count = 1;
  for (int r = 0; r < rank; ++r) count *= static_cast<std::size_t>(n);
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<std::pair<Mode, double>> terms;
    const double offset = rng.uniform(-amplitude, amplitude);
    for (int m = 0; m < modes; ++m) {
      Mode mode;
      for (int i = 0; i < n; ++i) mode.k.push_back(rng.uniform(-1.5, 1.5));
      mode.omega = rng.uniform(-1.5, 1.5);
      mode.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      terms.emplace_back(mode, amplitude * rng.uniform(-1.0, 1.0));
    }
    // constant part rides on a zero-frequency mode
    Mode flat;
    flat.k.assign(n, 0.0);
    flat.omega = 0.0;
    flat.phase = std::numbers::pi / 2.0;
    terms.emplace_back(flat, offset);
    comps_.push_back(std::move(terms));
  }
}

TensorJ RandomField::at(const std::vector<Jet>& x, const Jet& t) const {
  TensorJ out(n_, rank_, Jet());
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto idx = out.unravel(c);
    if (symmetric_ && rank_ == 2 && idx[0] > idx[1]) std::swap(idx[0], idx[1]);
    const auto& terms = comps_[out.flat(idx)];
    Jet acc = Jet::constant(t.space(), t.degree(), 0.0);
    for (const auto& [mode, amp] : terms) {
      Jet arg = mode.omega * t + mode.phase;
      for (int i = 0; i < n_; ++i) arg += mode.k[i] * x[i];
      acc += amp * sin(arg);
    }
    out[c] = acc;
  }
  return out;
}

TensorJ RandomField::jet(const JetSpace& space, int order, const ChartPoint& p) const {
  return at(coordinate_jets(space, order, p), Jet::variable(space, order, space.nx(), p.time));
}

}  // namespace riccilab
