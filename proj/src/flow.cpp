#include "riccilab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

#include <json.hpp>

#include "riccilab/errors.hpp"
#include "riccilab/harnack.hpp"

namespace riccilab {

namespace {

constexpr int kSnapshotSchema = 1;

int ipow(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

template <class F>
void parallel_for(std::size_t count, F&& fn) {
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || count < 256) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Spatial monomials of weight <= degree: index in the jet space and exponents.
struct SpatialMonomial {
  int idx;
  Exponents alpha;
  double factorial;
};

std::vector<SpatialMonomial> spatial_monomials(const JetSpace& space, int degree) {
  std::vector<SpatialMonomial> out;
  for (int idx = 0; idx < space.size(degree); ++idx) {
    const Monomial& m = space.monomial(idx);
    if (m.exp[space.time_var()] != 0) continue;
    double f = 1.0;
    for (int a = 0; a < space.nx(); ++a) f *= factorial(m.exp[a]);
    out.push_back({idx, m.exp, f});
  }
  return out;
}

// Every spatial derivative field up to `degree`, for building node jets of a
// whole tensor at many nodes.
class DerivativeCache {
 public:
  DerivativeCache(const Stencils& st, const GridTensor& t, int degree)
      : space_(&jet_space(st.grid().n)), degree_(degree), dim_(t.dim), rank_(t.rank) {
    monos_ = spatial_monomials(*space_, degree);
    fields_.resize(t.comps.size());
    for (std::size_t c = 0; c < t.comps.size(); ++c)
      for (const auto& m : monos_) fields_[c].push_back(st.apply(t.comps[c], m.alpha));
  }

  TensorJ at(std::size_t node) const {
    TensorJ out(dim_, rank_, Jet(*space_, degree_));
    for (std::size_t c = 0; c < fields_.size(); ++c)
      for (std::size_t k = 0; k < monos_.size(); ++k)
        out[c].coeff(monos_[k].idx) = fields_[c][k][node] / monos_[k].factorial;
    return out;
  }

 private:
  const JetSpace* space_;
  int degree_;
  int dim_;
  int rank_;
  std::vector<SpatialMonomial> monos_;
  std::vector<std::vector<Field>> fields_;
};

void store_symmetric(GridTensor& out, std::size_t node, const TensorJ& v) {
  const int n = out.dim;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double x = v(i, j).value();
      out(i, j)[node] = x;
      out(j, i)[node] = x;
    }
}

TensorD node_values(const GridTensor& t, std::size_t node) {
  TensorD out(t.dim, t.rank, 0.0);
  for (std::size_t c = 0; c < t.comps.size(); ++c) out[c] = t.comps[c][node];
  return out;
}

double min_eigenvalue(const GridTensor& g) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t node = 0; node < g.nodes(); ++node)
    lo = std::min(lo, symmetric_eigenvalues(node_values(g, node)).front());
  return lo;
}

void require_nondegenerate(const GridTensor& g, double t, const char* what) {
  const double lo = min_eigenvalue(g);
  if (!(lo >= 1e-8))
    throw MetricDegenerated(std::string(what) + " at t = " + std::to_string(t) + ": smallest eigenvalue " +
                            std::to_string(lo));
}

void require_cfl(const Grid& grid, const GridTensor& g, double dt, double cfl, double t, const char* what) {
  const double lim = cfl_limit(grid, g, cfl);
  if (dt > lim)
    throw CflViolation(std::string(what) + " at t = " + std::to_string(t) + ": dt = " + std::to_string(dt) +
                       " exceeds " + std::to_string(lim));
}

// Layout of a joint state vector: [g, h?, members...].
struct Layout {
  bool has_h = false;
  int members = 0;
};

std::vector<GridTensor> system_rhs(const Stencils& st, const std::vector<GridTensor>& y, const Layout& lay,
                                   const GridTensor* v) {
  const std::size_t nodes = st.grid().nodes();
  std::vector<GridTensor> out;
  for (const GridTensor& c : y) out.emplace_back(c.dim, c.rank, nodes);

  std::vector<DerivativeCache> caches;
  for (const GridTensor& c : y) caches.emplace_back(st, c, 2);
  std::optional<DerivativeCache> vcache;
  if (v) vcache.emplace(st, *v, 1);

  parallel_for(nodes, [&](std::size_t node) {
    const TensorJ g = caches[0].at(node);
    std::optional<TensorJ> vj;
    if (vcache) vj = vcache->at(node);
    store_symmetric(out[0], node, ricci_flow_rhs(g, vj ? &*vj : nullptr));
    std::size_t k = 1;
    if (lay.has_h) {
      store_symmetric(out[k], node, linearized_rhs(g, caches[k].at(node)));
      ++k;
    }
    for (int m = 0; m < lay.members; ++m, ++k) store_symmetric(out[k], node, deturck_rhs(caches[k].at(node), g));
  });
  return out;
}

std::vector<GridTensor> axpy(const std::vector<GridTensor>& y, double a, const std::vector<GridTensor>& k) {
  std::vector<GridTensor> out = y;
  for (std::size_t c = 0; c < y.size(); ++c)
    for (std::size_t f = 0; f < y[c].comps.size(); ++f)
      for (std::size_t i = 0; i < y[c].comps[f].size(); ++i) out[c].comps[f][i] += a * k[c].comps[f][i];
  return out;
}

std::vector<GridTensor> rk4(const Stencils& st, const std::vector<GridTensor>& y, double dt, const Layout& lay,
                            const GridTensor* v) {
  const auto k1 = system_rhs(st, y, lay, v);
  const auto k2 = system_rhs(st, axpy(y, 0.5 * dt, k1), lay, v);
  const auto k3 = system_rhs(st, axpy(y, 0.5 * dt, k2), lay, v);
  const auto k4 = system_rhs(st, axpy(y, dt, k3), lay, v);
  std::vector<GridTensor> out = y;
  for (std::size_t c = 0; c < y.size(); ++c)
    for (std::size_t f = 0; f < y[c].comps.size(); ++f)
      for (std::size_t i = 0; i < y[c].comps[f].size(); ++i)
        out[c].comps[f][i] +=
            dt / 6.0 * (k1[c].comps[f][i] + 2.0 * k2[c].comps[f][i] + 2.0 * k3[c].comps[f][i] + k4[c].comps[f][i]);
  return out;
}

TensorJ picard(const TensorJ& initial, int order, const std::function<TensorJ(const TensorJ&)>& rhs) {
  TensorJ y = initial;
  for (int it = 0; it < order / 2 + 1; ++it) {
    const TensorJ f = rhs(y);
    TensorJ next = initial;
    for (std::size_t c = 0; c < next.size(); ++c) next[c] += f[c].integrate_time();
    y = std::move(next);
  }
  for (Jet& c : y) c = c.truncated(order);
  return y;
}

std::vector<std::array<int, kMaxSpatialDim>> mode_vectors(int n) {
  std::vector<std::array<int, kMaxSpatialDim>> out;
  for (int a = 0; a < n; ++a) {
    std::array<int, kMaxSpatialDim> k{};
    k[a] = 1;
    out.push_back(k);
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      std::array<int, kMaxSpatialDim> k{};
      k[a] = 1;
      k[b] = 1;
      out.push_back(k);
      k[b] = -1;
      out.push_back(k);
    }
  return out;
}

GridTensor random_modes(const Grid& grid, double amplitude, CounterRng& rng, bool constant_term) {
  const std::size_t nodes = grid.nodes();
  GridTensor t(grid.n, 2, nodes);
  const auto modes = mode_vectors(grid.n);
  for (int i = 0; i < grid.n; ++i)
    for (int j = i; j < grid.n; ++j) {
      const double c0 = constant_term ? rng.normal() : 0.0;
      std::vector<std::pair<double, double>> coef;
      for (std::size_t m = 0; m < modes.size(); ++m) coef.emplace_back(rng.normal(), rng.normal());
      for (std::size_t node = 0; node < nodes; ++node) {
        const auto x = grid.coords(node);
        double acc = c0;
        for (std::size_t m = 0; m < modes.size(); ++m) {
          double phase = 0.0;
          for (int a = 0; a < grid.n; ++a) phase += modes[m][a] * x[a];
          acc += coef[m].first * std::cos(phase) + coef[m].second * std::sin(phase);
        }
        t(i, j)[node] = acc;
        t(j, i)[node] = acc;
      }
    }
  const double scale = t.max_abs();
  return scale > 0.0 ? (amplitude / scale) * t : t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid and fields

std::size_t Grid::nodes() const { return static_cast<std::size_t>(ipow(resolution, n)); }

std::array<int, kMaxSpatialDim> Grid::index_of(std::size_t node) const {
  std::array<int, kMaxSpatialDim> idx{};
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(node % static_cast<std::size_t>(resolution));
    node /= static_cast<std::size_t>(resolution);
  }
  return idx;
}

std::size_t Grid::node_of(const std::array<int, kMaxSpatialDim>& index) const {
  std::size_t node = 0;
  for (int a = 0; a < n; ++a) {
    const int i = ((index[a] % resolution) + resolution) % resolution;
    node = node * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(i);
  }
  return node;
}

std::vector<double> Grid::coords(std::size_t node) const {
  const auto idx = index_of(node);
  std::vector<double> x(n);
  for (int a = 0; a < n; ++a) x[a] = idx[a] * dx();
  return x;
}

std::size_t Grid::node_at(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n) throw PointOutOfChart("grid point needs " + std::to_string(n) + " coordinates");
  std::array<int, kMaxSpatialDim> idx{};
  for (int a = 0; a < n; ++a) {
    const double r = x[a] / dx();
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-8) throw PointOutOfChart("coordinate " + std::to_string(x[a]) + " is not a grid node");
    idx[a] = static_cast<int>(k);
  }
  return node_of(idx);
}

void Grid::validate() const {
  if (n < 1 || n > kMaxSpatialDim) throw ConfigInvalid("grid.n must be in [1, 3]");
  if (resolution < 8 || resolution > 512) throw ConfigInvalid("grid.resolution must be in [8, 512]");
  if (accuracy != 0 && (accuracy < 2 || accuracy > 8 || accuracy % 2 != 0))
    throw ConfigInvalid("grid.accuracy must be 0 (spectral) or an even order in [2, 8]");
  if (!(length > 0.0)) throw ConfigInvalid("grid.length must be positive");
  if (accuracy != 0 && 2 * fd_radius(kMaxJetOrder, accuracy) + 1 > resolution)
    throw ConfigInvalid("grid.resolution too small for the stencil width");
}

GridTensor::GridTensor(int dim_, int rank_, std::size_t nodes, double fill) : dim(dim_), rank(rank_) {
  comps.assign(static_cast<std::size_t>(ipow(dim_, rank_)), Field(nodes, fill));
}

double GridTensor::max_abs() const {
  double m = 0.0;
  for (const Field& f : comps)
    for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

GridTensor operator+(const GridTensor& a, const GridTensor& b) {
  GridTensor out = a;
  for (std::size_t c = 0; c < out.comps.size(); ++c)
    for (std::size_t i = 0; i < out.comps[c].size(); ++i) out.comps[c][i] += b.comps[c][i];
  return out;
}

GridTensor operator-(const GridTensor& a, const GridTensor& b) { return a + (-1.0) * b; }

GridTensor operator*(double s, const GridTensor& a) {
  GridTensor out = a;
  for (Field& f : out.comps)
    for (double& x : f) x *= s;
  return out;
}

// ---------------------------------------------------------------------------
// Stencils

int fd_radius(int m, int accuracy) { return m == 0 ? 0 : (m + 1) / 2 - 1 + accuracy / 2; }

std::vector<double> fd_weights(int m, int radius) {
  // Fornberg's recursion on the nodes -r..r, evaluated at 0.
  std::vector<double> z;
  for (int j = -radius; j <= radius; ++j) z.push_back(j);
  const int np = static_cast<int>(z.size());
  std::vector<std::vector<double>> c(np, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = z[0];
  c[0][0] = 1.0;
  for (int i = 1; i < np; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = z[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = z[i] - z[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(np);
  for (int i = 0; i < np; ++i) w[i] = c[i][m];
  return w;
}

Stencils::Stencils(const Grid& grid, int max_derivative) : grid_(grid) {
  grid_.validate();
  const int M = grid.resolution;
  const double h = grid.dx();
  const double wave = 2.0 * 3.141592653589793 / grid.length;
  for (int m = 0; m <= max_derivative; ++m) {
    if (grid.accuracy == 0) {
      // w_j = (1/M) sum_k (i k)^m exp(-i k j h), k = -M/2+1 .. M/2
      std::vector<double> w(M, 0.0);
      for (int j = 0; j < M; ++j) {
        std::complex<double> acc = 0.0;
        for (int k = -M / 2 + 1; k <= M / 2; ++k) {
          std::complex<double> sym = 1.0;
          for (int r = 0; r < m; ++r) sym *= std::complex<double>(0.0, wave * k);
          acc += sym * std::exp(std::complex<double>(0.0, -wave * k * j * h));
        }
        w[j] = acc.real() / M;
      }
      // offsets 0..M-1 stored as radius M/2 window starting at -M/2+1
      std::vector<double> centered(M, 0.0);
      for (int off = -M / 2 + 1; off <= M / 2; ++off) centered[off + M / 2 - 1] = w[(off + M) % M];
      weights_.push_back(centered);
      radius_.push_back(-1);
    } else {
      const int r = fd_radius(m, grid.accuracy);
      std::vector<double> w = fd_weights(m, r);
      const double scale = std::pow(h, -m);
      for (double& x : w) x *= scale;
      weights_.push_back(w);
      radius_.push_back(r);
    }
  }
}

Field Stencils::apply_axis(const Field& f, int axis, int m) const {
  if (m == 0) return f;
  const std::vector<double>& w = weights_.at(m);
  const int lo = radius_[m] < 0 ? -grid_.resolution / 2 + 1 : -radius_[m];
  Field out(f.size(), 0.0);
  for (std::size_t node = 0; node < f.size(); ++node) {
    auto idx = grid_.index_of(node);
    const int base = idx[axis];
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      idx[axis] = base + lo + static_cast<int>(k);
      acc += w[k] * f[grid_.node_of(idx)];
    }
    out[node] = acc;
  }
  return out;
}

Field Stencils::apply(const Field& f, const Exponents& alpha) const {
  Field out = f;
  for (int a = 0; a < grid_.n; ++a) out = apply_axis(out, a, alpha[a]);
  return out;
}

double Stencils::at(const Field& f, std::size_t node, const Exponents& alpha) const {
  const int n = grid_.n;
  const auto base = grid_.index_of(node);
  std::array<const std::vector<double>*, kMaxSpatialDim> w{};
  std::array<int, kMaxSpatialDim> lo{}, count{};
  static const std::vector<double> kOne{1.0};
  for (int a = 0; a < n; ++a) {
    const int m = alpha[a];
    if (m == 0) {
      w[a] = &kOne;
      lo[a] = 0;
    } else {
      w[a] = &weights_.at(m);
      lo[a] = radius_[m] < 0 ? -grid_.resolution / 2 + 1 : -radius_[m];
    }
    count[a] = static_cast<int>(w[a]->size());
  }
  double acc = 0.0;
  std::array<int, kMaxSpatialDim> k{};
  while (true) {
    double weight = 1.0;
    std::array<int, kMaxSpatialDim> idx{};
    for (int a = 0; a < n; ++a) {
      weight *= (*w[a])[k[a]];
      idx[a] = base[a] + lo[a] + k[a];
    }
    if (weight != 0.0) acc += weight * f[grid_.node_of(idx)];
    int a = n - 1;
    while (a >= 0 && ++k[a] == count[a]) k[a--] = 0;
    if (a < 0) break;
  }
  return acc;
}

TensorJ node_jet(const Stencils& st, const GridTensor& t, std::size_t node, int degree) {
  const JetSpace& space = jet_space(st.grid().n);
  TensorJ out(t.dim, t.rank, Jet(space, degree));
  const auto monos = spatial_monomials(space, degree);
  for (std::size_t c = 0; c < t.comps.size(); ++c)
    for (const auto& m : monos) out[c].coeff(m.idx) = st.at(t.comps[c], node, m.alpha) / m.factorial;
  return out;
}

// ---------------------------------------------------------------------------
// Right-hand sides

TensorJ ricci_flow_rhs(const TensorJ& g, const CotensorJet* v) {
  const int n = g.dim();
  const Chart chart{n, false};
  const TensorJ gi = inverse(g);
  const TensorJ gamma = christoffel_symbols(g, gi, chart);
  const TensorJ rc = ricci_from_riemann(riemann_from_connection(gamma, chart));
  TensorJ out(n, 2, Jet());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = -2.0 * rc[c];
  if (v) {
    const TensorJ dv = covariant_derivative(*v, gamma, chart);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) += dv(i, j) + dv(j, i);
  }
  return out;
}

CotensorJet deturck_w(const TensorJ& g_s, const TensorJ& g_base) {
  const int n = g_s.dim();
  const Chart chart{n, false};
  const TensorJ gi = inverse(g_s);
  const TensorJ gamma_s = christoffel_symbols(g_s, gi, chart);
  const TensorJ gamma_b = christoffel_symbols(g_base, inverse(g_base), chart);
  std::vector<Jet> w_up;
  for (int k = 0; k < n; ++k) {
    Jet acc = gi(0, 0) * (gamma_s(k, 0, 0) - gamma_b(k, 0, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i + j > 0) acc += gi(i, j) * (gamma_s(k, i, j) - gamma_b(k, i, j));
    w_up.push_back(acc);
  }
  CotensorJet w(n, 1, Jet());
  for (int k = 0; k < n; ++k) {
    Jet acc = g_s(k, 0) * w_up[0];
    for (int l = 1; l < n; ++l) acc += g_s(k, l) * w_up[l];
    w(k) = acc;
  }
  return w;
}

TensorJ deturck_rhs(const TensorJ& g_s, const TensorJ& g_base) {
  const CotensorJet w = deturck_w(g_s, g_base);
  return ricci_flow_rhs(g_s, &w);
}

TensorJ linearized_rhs(const TensorJ& g, const TensorJ& h) {
  MetricJet jet;
  jet.g = g;
  jet.g_inv = inverse(g);
  jet.order = g[0].degree();
  const SpatialConnection conn = christoffel(jet);
  CurvaturePack curv;
  curv.riem = riemann_from_connection(conn.gamma, conn.chart);
  curv.riem_low = lower_index(curv.riem, jet.g, 3);
  curv.ricci = ricci_from_riemann(curv.riem);
  return lichnerowicz(jet, conn, curv, h);
}

TensorJ ck_base(const TensorJ& g_spatial, int order) {
  return picard(g_spatial, order, [](const TensorJ& g) { return ricci_flow_rhs(g); });
}

TensorJ ck_member(const TensorJ& g_spatial, const TensorJ& g_base, int order) {
  return picard(g_spatial, order, [&](const TensorJ& g) { return deturck_rhs(g, g_base); });
}

TensorJ ck_h(const TensorJ& h_spatial, const TensorJ& g_base, int order) {
  return picard(h_spatial, order, [&](const TensorJ& h) { return linearized_rhs(g_base, h); });
}

// ---------------------------------------------------------------------------
// Time stepping

double cfl_limit(const Grid& grid, const GridTensor& g, double cfl) {
  const double lo = min_eigenvalue(g);
  if (!(lo > 0.0)) throw MetricDegenerated("metric is not positive-definite");
  return cfl * grid.dx() * grid.dx() * lo;  // max |g^-1| = 1 / min eigenvalue of g
}

double choose_dt(const Grid& grid, const GridTensor& g, double cfl, double horizon) {
  if (!(horizon > 0.0)) throw ConfigInvalid("flow.horizon must be positive");
  const double lim = 0.8 * cfl_limit(grid, g, cfl);
  const double steps = std::ceil(horizon / lim - 1e-12);
  return horizon / steps;
}

GridState step_ricci(const GridState& s, const StepOptions& opt) {
  if (!(s.dt > 0.0)) throw ConfigInvalid("state.dt must be positive");
  require_cfl(s.grid, s.g, s.dt, opt.cfl, s.t, "ricci step");
  const Stencils st(s.grid, 2);
  GridState out = s;
  out.g = rk4(st, {s.g}, s.dt, Layout{}, s.v ? &*s.v : nullptr)[0];
  out.t = s.t + s.dt;
  require_nondegenerate(out.g, out.t, "ricci step");
  return out;
}

GridState step_h(const GridState& s, const StepOptions& opt) {
  if (!s.h) throw ConfigInvalid("state carries no h field");
  if (!(s.dt > 0.0)) throw ConfigInvalid("state.dt must be positive");
  require_cfl(s.grid, s.g, s.dt, opt.cfl, s.t, "h step");
  const Stencils st(s.grid, 2);
  const auto y = rk4(st, {s.g, *s.h}, s.dt, Layout{true, 0}, s.v ? &*s.v : nullptr);
  GridState out = s;
  out.g = y[0];
  out.h = y[1];
  out.t = s.t + s.dt;
  require_nondegenerate(out.g, out.t, "h step");
  return out;
}

double trace_evolution_check(const GridState& s) {
  if (!s.h) throw ConfigInvalid("state carries no h field");
  const Stencils st(s.grid, 2);
  const std::size_t nodes = s.grid.nodes();
  const int n = s.grid.n;
  const DerivativeCache gc(st, s.g, 2), hc(st, *s.h, 2);

  Field H(nodes, 0.0);
  for (std::size_t node = 0; node < nodes; ++node) {
    const TensorD h = node_values(*s.h, node);
    const TensorJ gi = inverse(gc.at(node));
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += gi(i, j).value() * h(i, j);
    H[node] = acc;
  }
  std::vector<Field> dH(n), d2H(n * n);
  for (int a = 0; a < n; ++a) {
    Exponents e{};
    e[a] = 1;
    dH[a] = st.apply(H, e);
    for (int b = 0; b < n; ++b) {
      Exponents e2{};
      e2[a] += 1;
      e2[b] += 1;
      d2H[a * n + b] = st.apply(H, e2);
    }
  }

  double worst = 0.0;
  for (std::size_t node = 0; node < nodes; ++node) {
    const TensorJ g = gc.at(node), h = hc.at(node);
    const TensorJ gi = inverse(g);
    const Chart chart{n, false};
    const TensorJ gamma = christoffel_symbols(g, gi, chart);
    const TensorJ rc = ricci_from_riemann(riemann_from_connection(gamma, chart));
    const TensorJ lh = linearized_rhs(g, h);
    double dtH = 0.0, lapH = 0.0, rch = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double gij = gi(i, j).value();
        double rc_up = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) rc_up += gi(i, a).value() * gi(j, b).value() * rc(a, b).value();
        dtH += gij * lh(i, j).value() + 2.0 * rc_up * h(i, j).value();
        rch += rc_up * h(i, j).value();
        double hess = d2H[i * n + j][node];
        for (int c = 0; c < n; ++c) hess -= gamma(c, i, j).value() * dH[c][node];
        lapH += gij * hess;
      }
    worst = std::max(worst, std::abs(dtH - lapH - 2.0 * rch));
  }
  return worst;
}

GridTensor grid_ricci(const Stencils& st, const GridTensor& g) {
  const DerivativeCache gc(st, g, 2);
  GridTensor out(g.dim, 2, g.nodes());
  parallel_for(g.nodes(), [&](std::size_t node) {
    const TensorJ gj = gc.at(node);
    store_symmetric(out, node, ricci_tensor(gj, inverse(gj)));
  });
  return out;
}

Field grid_scalar(const Stencils& st, const GridTensor& g) {
  const DerivativeCache gc(st, g, 2);
  Field out(g.nodes(), 0.0);
  parallel_for(g.nodes(), [&](std::size_t node) {
    const TensorJ gj = gc.at(node);
    const TensorJ gi = inverse(gj);
    out[node] = contract2(gi, ricci_tensor(gj, gi)).value();
  });
  return out;
}

std::size_t GridTrajectory::snapshot_at(double t) const {
  for (std::size_t m = 0; m < snapshots.size(); ++m)
    if (std::abs(snapshots[m].t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return m;
  throw PointOutOfChart("no stored snapshot at t = " + std::to_string(t));
}

GridTrajectory integrate_flow(const GridState& initial, double horizon, const StepOptions& opt) {
  GridState s = initial;
  if (!(s.dt > 0.0)) s.dt = choose_dt(s.grid, s.g, opt.cfl, horizon);
  const int steps = static_cast<int>(std::ceil(horizon / s.dt - 1e-9));
  GridTrajectory traj;
  traj.grid = s.grid;
  traj.dt = s.dt;
  traj.snapshots.push_back({s.t, s.g, s.h, {}});
  for (int k = 0; k < steps; ++k) {
    s = s.h ? step_h(s, opt) : step_ricci(s, opt);
    traj.snapshots.push_back({s.t, s.g, s.h, {}});
  }
  return traj;
}

GridTrajectory build_deturck_family(const GridTrajectory& base, double s0, const StepOptions& opt) {
  if (base.snapshots.empty()) throw BaseTrajectoryMissing("base trajectory has no snapshots");
  if (!base.has_h()) throw BaseTrajectoryMissing("base trajectory carries no h");
  if (!(s0 > 0.0)) throw ConfigInvalid("family.s0 must be positive");
  const FlowSnapshot& first = base.snapshots.front();
  const GridTensor& h0 = *first.h;

  std::vector<GridTensor> y{first.g, h0};
  for (int k : {-2, -1, 1, 2}) {
    y.push_back(first.g + (k * s0) * h0);
    require_nondegenerate(y.back(), first.t, "family member");
  }

  GridTrajectory out;
  out.grid = base.grid;
  out.dt = base.dt;
  out.s0 = s0;
  const Stencils st(base.grid, 2);
  const Layout lay{true, 4};
  double t = first.t;
  out.snapshots.push_back({t, y[0], y[1], {y[2], y[3], y[4], y[5]}});
  for (std::size_t step = 1; step < base.snapshots.size(); ++step) {
    for (std::size_t c : {0u, 2u, 3u, 4u, 5u}) require_cfl(base.grid, y[c], base.dt, opt.cfl, t, "family step");
    y = rk4(st, y, base.dt, lay, nullptr);
    t += base.dt;
    for (std::size_t c : {0u, 2u, 3u, 4u, 5u}) require_nondegenerate(y[c], t, "family step");
    out.snapshots.push_back({t, y[0], y[1], {y[2], y[3], y[4], y[5]}});
  }
  // the base is recomputed with the same arithmetic, so it must agree exactly
  const GridTensor diff = out.snapshots.back().g - base.snapshots.back().g;
  if (diff.max_abs() > 1e-12) throw BaseTrajectoryMissing("stored base trajectory does not match its initial data");
  return out;
}

// ---------------------------------------------------------------------------
// Initial data

GridTensor perturbed_flat_metric(const Grid& grid, double amplitude, std::uint64_t seed) {
  CounterRng rng(seed, "perturbed_flat");
  GridTensor g = random_modes(grid, amplitude, rng, false);
  for (int i = 0; i < grid.n; ++i)
    for (double& x : g(i, i)) x += 1.0;
  return g;
}

GridTensor random_symmetric_field(const Grid& grid, double amplitude, std::uint64_t seed) {
  CounterRng rng(seed, "symmetric_field");
  return random_modes(grid, amplitude, rng, true);
}

GridTensor conformal_mode_metric(const Grid& grid, double amplitude, const std::vector<int>& k) {
  GridTensor g(grid.n, 2, grid.nodes());
  for (std::size_t node = 0; node < grid.nodes(); ++node) {
    const auto x = grid.coords(node);
    double phase = 0.0;
    for (int a = 0; a < grid.n; ++a) phase += k.at(a) * x[a];
    for (int i = 0; i < grid.n; ++i) g(i, i)[node] = 1.0 + amplitude * std::sin(phase);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Snapshot files

namespace {

nlohmann::json field_json(const std::string& name, const GridTensor& t) {
  nlohmann::json comps = nlohmann::json::array();
  for (const Field& f : t.comps) comps.push_back(f);
  return {{"name", name}, {"rank", t.rank}, {"dim", t.dim}, {"components", comps}};
}

GridTensor field_from_json(const nlohmann::json& j, std::size_t nodes) {
  GridTensor t(j.at("dim").get<int>(), j.at("rank").get<int>(), nodes);
  const auto& comps = j.at("components");
  if (comps.size() != t.comps.size()) throw ConfigInvalid("snapshot field has the wrong number of components");
  for (std::size_t c = 0; c < t.comps.size(); ++c) {
    t.comps[c] = comps[c].get<std::vector<double>>();
    if (t.comps[c].size() != nodes) throw ConfigInvalid("snapshot component has the wrong number of nodes");
  }
  return t;
}

const char* kMemberNames[4] = {"g_s-2", "g_s-1", "g_s+1", "g_s+2"};

}  // namespace

void write_snapshot(const std::string& path, const Grid& grid, const FlowSnapshot& snap) {
  nlohmann::json j;
  j["schema_version"] = kSnapshotSchema;
  j["n"] = grid.n;
  j["resolution"] = grid.resolution;
  j["accuracy"] = grid.accuracy;
  j["length"] = grid.length;
  j["t"] = snap.t;
  nlohmann::json fields = nlohmann::json::array();
  fields.push_back(field_json("g", snap.g));
  if (snap.h) fields.push_back(field_json("h", *snap.h));
  for (std::size_t k = 0; k < snap.members.size() && k < 4; ++k)
    fields.push_back(field_json(kMemberNames[k], snap.members[k]));
  j["fields"] = fields;
  std::ofstream out(path);
  if (!out) throw ConfigInvalid("cannot write snapshot " + path);
  out << j.dump() << '\n';
}

FlowSnapshot read_snapshot(const std::string& path, Grid* grid_out) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read snapshot " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid("snapshot " + path + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kSnapshotSchema)
    throw ConfigInvalid("snapshot " + path + ": unsupported schema_version");
  Grid grid;
  grid.n = j.at("n").get<int>();
  grid.resolution = j.at("resolution").get<int>();
  grid.accuracy = j.at("accuracy").get<int>();
  grid.length = j.at("length").get<double>();
  grid.validate();
  FlowSnapshot snap;
  snap.t = j.at("t").get<double>();
  bool have_g = false;
  std::vector<std::pair<int, GridTensor>> members;
  for (const auto& f : j.at("fields")) {
    const std::string name = f.at("name").get<std::string>();
    GridTensor t = field_from_json(f, grid.nodes());
    if (name == "g") {
      snap.g = std::move(t);
      have_g = true;
    } else if (name == "h") {
      snap.h = std::move(t);
    } else {
      for (int k = 0; k < 4; ++k)
        if (name == kMemberNames[k]) members.emplace_back(k, std::move(t));
    }
  }
  if (!have_g) throw ConfigInvalid("snapshot " + path + " has no g field");
  std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [k, t] : members) snap.members.push_back(std::move(t));
  if (grid_out) *grid_out = grid;
  return snap;
}

// ---------------------------------------------------------------------------
// Providers

namespace {

ChartPoint sample_grid_point(const GridTrajectory& traj, CounterRng& rng) {
  const int count = static_cast<int>(traj.snapshots.size());
  if (count < 3) throw ProviderUnavailable("grid trajectory needs at least three snapshots");
  const std::size_t node = static_cast<std::size_t>(rng.integer(0, static_cast<int>(traj.grid.nodes()) - 1));
  const int m = rng.integer(1, count - 2);
  return {traj.grid.coords(node), traj.snapshots[m].t};
}

class GridProvider final : public SolutionProvider {
 public:
  GridProvider(std::shared_ptr<const GridTrajectory> traj, std::string id)
      : traj_(std::move(traj)), id_(std::move(id)), st_(traj_->grid) {}

  std::string id() const override { return id_; }
  Family family() const override { return Family::GridNumeric; }
  int dim() const override { return traj_->grid.n; }
  double t_max() const override { return traj_->snapshots.back().t; }
  bool closed_form() const override { return false; }
  bool contains(const ChartPoint& p) const override {
    try {
      traj_->grid.node_at(p.coords);
      traj_->snapshot_at(p.time);
      return true;
    } catch (const PointOutOfChart&) {
      return false;
    }
  }
  ChartPoint sample_point(CounterRng& rng) const override { return sample_grid_point(*traj_, rng); }
  double sample_t_max() const override { return t_max(); }

  MetricJet metric_jet(const ChartPoint& p, int order) const override {
    require_inside(p);
    const FlowSnapshot& snap = traj_->snapshots[traj_->snapshot_at(p.time)];
    const std::size_t node = traj_->grid.node_at(p.coords);
    return make_metric_jet(p, order, ck_base(node_jet(st_, snap.g, node, order), order));
  }

  TensorJ metric_at(const std::vector<Jet>&, const Jet&) const override {
    throw ProviderUnavailable(id_ + " has no closed form");
  }

  CotensorJet evolved_h_jet(const ChartPoint& p, int order) const override {
    require_inside(p);
    if (!traj_->has_h()) throw ProviderUnavailable(id_ + " carries no evolved h field");
    const FlowSnapshot& snap = traj_->snapshots[traj_->snapshot_at(p.time)];
    const std::size_t node = traj_->grid.node_at(p.coords);
    const TensorJ g = ck_base(node_jet(st_, snap.g, node, order), order);
    return ck_h(node_jet(st_, *snap.h, node, order), g, order);
  }

 private:
  std::shared_ptr<const GridTrajectory> traj_;
  std::string id_;
  Stencils st_;
};

class GridFamily final : public TwoParamFamily {
 public:
  GridFamily(std::shared_ptr<const GridTrajectory> traj, std::string id)
      : traj_(std::move(traj)), id_(std::move(id)), st_(traj_->grid) {
    if (!traj_->has_members() || !traj_->has_h()) throw FamilyMissing("trajectory carries no family members");
  }

  std::string id() const override { return id_; }
  int dim() const override { return traj_->grid.n; }
  double s0() const override { return traj_->s0; }
  bool on_grid() const override { return true; }
  double time_step() const override { return traj_->dt; }
  ChartPoint sample_point(CounterRng& rng) const override { return sample_grid_point(*traj_, rng); }

  FamilyPoint at(const ChartPoint& p, int order) const override {
    const FlowSnapshot& snap = traj_->snapshots[traj_->snapshot_at(p.time)];
    const std::size_t node = traj_->grid.node_at(p.coords);
    FamilyPoint out;
    out.point = p;
    out.s0 = traj_->s0;
    const TensorJ base = ck_base(node_jet(st_, snap.g, node, order), order);
    out.members[2] = make_metric_jet(p, order, base);
    const int ks[4] = {-2, -1, 1, 2};
    for (int m = 0; m < 4; ++m)
      out.members[ks[m] + 2] = make_metric_jet(p, order, ck_member(node_jet(st_, snap.members[m], node, order), base, order));
    out.h = ck_h(node_jet(st_, *snap.h, node, order), base, order);
    return out;
  }

 private:
  std::shared_ptr<const GridTrajectory> traj_;
  std::string id_;
  Stencils st_;
};

class ScalingFamily final : public TwoParamFamily {
 public:
  ScalingFamily(ProviderPtr base, double s0) : base_(std::move(base)), s0_(s0) {
    const Family f = base_->family();
    if (f != Family::FlatTorus && f != Family::RoundSphereShrinker && f != Family::SphereCrossFlat)
      throw ConfigInvalid("scaling family needs time-independent Christoffel symbols; got " + base_->id());
    if (!(s0 > 0.0 && s0 < 0.1)) throw ConfigInvalid("scaling family s0 must be in (0, 0.1)");
  }

  std::string id() const override { return base_->id() + "_scaling"; }
  int dim() const override { return base_->dim(); }
  double s0() const override { return s0_; }
  bool on_grid() const override { return false; }
  ChartPoint sample_point(CounterRng& rng) const override {
    ChartPoint p = base_->sample_point(rng);
    p.time *= 0.8;  // keeps t / (1 + s) inside the sampling window for every member
    return p;
  }

  FamilyPoint at(const ChartPoint& p, int order) const override {
    const JetSpace& space = jet_space(dim());
    const auto x = coordinate_jets(space, order, p);
    const Jet t = Jet::variable(space, order, dim(), p.time);
    FamilyPoint out;
    out.point = p;
    out.s0 = s0_;
    for (int k = -2; k <= 2; ++k) {
      const double scale = 1.0 + k * s0_;
      TensorJ g = base_->metric_at(x, t * (1.0 / scale));
      for (Jet& c : g) c = c * scale;
      out.members[k + 2] = make_metric_jet(p, order, std::move(g));
    }
    const TensorJ rc = eval_h_jet(*base_, HFamily::Ricci, p, order);
    const TensorJ& g = out.members[2].g;
    out.h = TensorJ(dim(), 2, Jet());
    for (std::size_t c = 0; c < rc.size(); ++c) out.h[c] = (g[c] + 2.0 * t * rc[c]).truncated(order);
    return out;
  }

 private:
  ProviderPtr base_;
  double s0_;
};

}  // namespace

ProviderPtr make_grid_provider(std::shared_ptr<const GridTrajectory> traj, std::string id) {
  if (!traj || traj->snapshots.empty()) throw BaseTrajectoryMissing("grid provider needs a trajectory");
  return std::make_shared<GridProvider>(std::move(traj), std::move(id));
}

FamilyPtr make_grid_family(std::shared_ptr<const GridTrajectory> traj, std::string id) {
  if (!traj || traj->snapshots.empty()) throw FamilyMissing("no trajectory");
  return std::make_shared<GridFamily>(std::move(traj), std::move(id));
}

FamilyPtr make_scaling_family(ProviderPtr base, double s0) {
  return std::make_shared<ScalingFamily>(std::move(base), s0);
}

}  // namespace riccilab
