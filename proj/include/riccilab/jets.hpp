#pragma once

// Pointwise jet evaluation of metric families: closed-form Ricci-flow
// solutions and their diffeomorphism pullbacks. The periodic-grid provider
// lives in flow.hpp.

#include <memory>
#include <string>
#include <vector>

#include "riccilab/rng.hpp"
#include "riccilab/tensor.hpp"

namespace riccilab {

/// Deepest weighted jet order any provider will evaluate.
inline constexpr int kMaxProviderOrder = 8;

struct ChartPoint {
  std::vector<double> coords;  // x^1..x^n
  double time = 0.0;           // t = x^0
};

/// g_ij with every partial derivative up to the requested weighted order,
/// stored as jets. `g_inv` is the inverse metric to the same order.
struct MetricJet {
  ChartPoint point;
  int order = 0;
  TensorJ g;
  TensorJ g_inv;

  int dim() const { return g.dim(); }
  const JetSpace& space() const { return g[0].space(); }
  Chart chart() const { return Chart{dim(), false}; }

  double value(int i, int j) const { return g(i, j).value(); }
  /// d^alpha g_ij at the point; alpha holds spatial exponents then the time
  /// exponent.
  double partial(int i, int j, const Exponents& alpha) const { return g(i, j).derivative(alpha); }
};

/// Covariant tensor field jet (h_ij, V_i, W_i ...). Rank and dimension are
/// carried by the tensor.
using CotensorJet = TensorJ;

enum class Family { FlatTorus, RoundSphereShrinker, CigarSoliton, SphereCrossFlat, GridNumeric, PulledBack };

std::string family_name(Family f);

class SolutionProvider {
 public:
  virtual ~SolutionProvider() = default;

  virtual std::string id() const = 0;
  virtual Family family() const = 0;
  virtual int dim() const = 0;
  /// Solutions exist on [0, t_max()).
  virtual double t_max() const = 0;
  virtual bool closed_form() const { return true; }
  /// Nonnegative curvature operator with bounded curvature (the hypotheses
  /// under which Harnack positivity is expected).
  virtual bool nonnegative_curvature() const { return false; }
  virtual bool contains(const ChartPoint& p) const = 0;
  /// Random point from the provider's sampling region.
  virtual ChartPoint sample_point(CounterRng& rng) const = 0;
  /// Latest time used when sampling.
  virtual double sample_t_max() const = 0;

  /// Jet of g at p to the given weighted order.
  virtual MetricJet metric_jet(const ChartPoint& p, int order) const;
  /// The 1-form V with dg/dt = -2 Rc + L_V g; zero for plain Ricci flow.
  virtual CotensorJet shift_jet(const ChartPoint& p, int order) const;

  /// Metric components evaluated on coordinate jets (closed-form families).
  virtual TensorJ metric_at(const std::vector<Jet>& x, const Jet& t) const = 0;
  /// Jet of a linearized solution h carried by the provider (grid runs).
  virtual CotensorJet evolved_h_jet(const ChartPoint& p, int order) const;

 protected:
  void require_inside(const ChartPoint& p) const;
};

using ProviderPtr = std::shared_ptr<const SolutionProvider>;

/// The shared jet space for spatial dimension n (every jet in a computation
/// must live in the same space).
const JetSpace& jet_space(int n);

/// Coordinate jets x^1..x^n, t about p.
std::vector<Jet> coordinate_jets(const JetSpace& space, int order, const ChartPoint& p);

/// Checks `order` and chart membership, then returns the provider's jet.
MetricJet eval_metric_jet(const SolutionProvider& provider, const ChartPoint& p, int order);

/// Builds a MetricJet from components, validating positive-definiteness.
MetricJet make_metric_jet(const ChartPoint& p, int order, TensorJ g);

enum class HFamily { Ricci, GridEvolved };

/// h with jets to the given weighted order. HFamily::Ricci gives h = Rc(g),
/// which solves the linearized equation along Ricci flow; GridEvolved requires
/// a grid provider carrying an evolved h.
CotensorJet eval_h_jet(const SolutionProvider& provider, HFamily family, const ChartPoint& p, int order);

// Closed-form families.
ProviderPtr make_flat_torus(int n);
ProviderPtr make_round_sphere(int n, double r0);
ProviderPtr make_cigar();
ProviderPtr make_sphere_cross_flat(double r0);

/// Pullback of `base` by the time-dependent diffeomorphism
/// phi_t(x) = x + t A(x) + t^2 B(x) / 2 with random smooth A, B. The result
/// solves dg/dt = -2 Rc + L_V g with a generically non-gradient V.
ProviderPtr make_pulled_back(ProviderPtr base, std::uint64_t seed, double amplitude = 0.15);

/// Short-name catalog: flat, flat3, sphere2, sphere3, cigar, s2xs1.
ProviderPtr provider_from_name(const std::string& name);
std::vector<std::string> closed_form_provider_names();

/// Smooth random field used where an arbitrary (non-solution) tensor is
/// admissible: a trigonometric polynomial in (x, t) with seeded coefficients.
class RandomField {
 public:
  RandomField(int n, int rank, bool symmetric, std::uint64_t seed, double amplitude = 0.5, int modes = 3);
  TensorJ at(const std::vector<Jet>& x, const Jet& t) const;
  TensorJ jet(const JetSpace& space, int order, const ChartPoint& p) const;
  int dim() const { return n_; }
  int rank() const { return rank_; }

 private:
  struct Mode {
    std::vector<double> k;
    double omega;
    double phase;
  };
  int n_;
  int rank_;
  bool symmetric_;
  std::vector<std::vector<std::pair<Mode, double>>> comps_;
};

}  // namespace riccilab
