#include "riccilab/jet.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "riccilab/errors.hpp"

namespace riccilab {

namespace {

int dense_key(const Exponents& e, int nvars, int base) {
  int key = 0;
  for (int v = 0; v < nvars; ++v) key = key * base + e[v];
  return key;
}

}  // namespace

JetSpace::JetSpace(int nx, int max_order) : nx_(nx), max_order_(max_order) {
  if (nx < 1 || nx > kMaxSpatialDim) throw OrderUnsupported("spatial dimension " + std::to_string(nx));
  if (max_order < 0 || max_order > kMaxJetOrder)
    throw OrderUnsupported("jet order " + std::to_string(max_order) + " (max " +
                           std::to_string(kMaxJetOrder) + ")");
  const int nv = nx + 1;
  size_by_degree_.assign(max_order + 1, 0);
  for (int w = 0; w <= max_order; ++w) {
    // enumerate x^alpha t^m with |alpha| + 2m == w
    for (int m = 0; 2 * m <= w; ++m) {
      const int s = w - 2 * m;
      Exponents e{};
      e[nx] = m;
      // compositions of s into nx parts, lexicographic
      std::vector<int> parts(nx, 0);
      parts[0] = s;
      while (true) {
        for (int v = 0; v < nx; ++v) e[v] = parts[v];
        monos_.push_back({e, w});
        // next composition
        int i = nx - 2;
        while (i >= 0 && parts[i] == 0) --i;
        if (i < 0) break;
        parts[i] -= 1;
        int rest = 0;
        for (int j = i + 1; j < nx; ++j) rest += parts[j];
        for (int j = i + 1; j < nx; ++j) parts[j] = 0;
        parts[i + 1] = rest + 1;
      }
    }
    size_by_degree_[w] = static_cast<int>(monos_.size());
  }

  const int base = max_order + 1;
  std::vector<int> lookup(static_cast<std::size_t>(std::pow(base, nv)), -1);
  for (int i = 0; i < static_cast<int>(monos_.size()); ++i)
    lookup[dense_key(monos_[i].exp, nv, base)] = i;
  auto find = [&](const Exponents& e) {
    int w = 0;
    for (int v = 0; v < nv; ++v) w += e[v] * var_weight(v);
    if (w > max_order) return -1;
    return lookup[dense_key(e, nv, base)];
  };

  for (int v = 0; v < nv; ++v) {
    raise_[v].resize(monos_.size());
    for (int i = 0; i < static_cast<int>(monos_.size()); ++i) {
      Exponents e = monos_[i].exp;
      e[v] += 1;
      raise_[v][i] = find(e);
    }
  }

  const int n = static_cast<int>(monos_.size());
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (monos_[a].weight + monos_[b].weight > max_order) continue;
      Exponents e{};
      for (int v = 0; v < nv; ++v) e[v] = monos_[a].exp[v] + monos_[b].exp[v];
      pairs_.push_back({a, b, find(e)});
    }
  }
  std::stable_sort(pairs_.begin(), pairs_.end(), [&](const Pair& p, const Pair& q) {
    return monos_[p.c].weight < monos_[q.c].weight;
  });
  pairs_by_degree_.assign(max_order + 1, 0);
  for (const Pair& p : pairs_)
    for (int d = monos_[p.c].weight; d <= max_order; ++d) ++pairs_by_degree_[d];
}

const JetSpace& JetSpace::get(int nx, int max_order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nx, max_order}];
  if (!slot) slot = std::make_unique<JetSpace>(nx, max_order);
  return *slot;
}

int JetSpace::size(int degree) const {
  if (degree < 0) return 0;
  return size_by_degree_[std::min(degree, max_order_)];
}

int JetSpace::index_of(const Exponents& e) const {
  for (int i = 0; i < static_cast<int>(monos_.size()); ++i) {
    bool same = true;
    for (int v = 0; v < nvars(); ++v) same = same && monos_[i].exp[v] == e[v];
    if (same) return i;
  }
  return -1;
}

std::span<const JetSpace::Pair> JetSpace::pairs(int degree) const {
  if (degree < 0) return {};
  return {pairs_.data(), static_cast<std::size_t>(pairs_by_degree_[std::min(degree, max_order_)])};
}

Jet::Jet(const JetSpace& space, int degree)
    : space_(&space),
      degree_(std::min(degree, space.max_order())),
      c_(static_cast<std::size_t>(space.size(degree)), 0.0) {}

Jet Jet::constant(const JetSpace& space, int degree, double value) {
  Jet j(space, degree);
  if (!j.c_.empty()) j.c_[0] = value;
  return j;
}

Jet Jet::variable(const JetSpace& space, int degree, int v, double value) {
  Jet j = constant(space, degree, value);
  const int idx = space.raise(v, 0);
  if (idx >= 0 && idx < static_cast<int>(j.c_.size())) j.c_[idx] = 1.0;
  return j;
}

double Jet::value() const {
  if (degree_ < 0) throw InsufficientJet("jet exhausted by differentiation");
  return c_[0];
}

double Jet::derivative(const Exponents& alpha) const {
  const int idx = space_->index_of(alpha);
  if (idx < 0 || idx >= static_cast<int>(c_.size()))
    throw InsufficientJet("requested derivative beyond jet degree");
  double fact = 1.0;
  for (int v = 0; v < space_->nvars(); ++v)
    for (int k = 2; k <= alpha[v]; ++k) fact *= k;
  return c_[idx] * fact;
}

Jet Jet::d(int v) const {
  Jet r(*space_, degree_ - space_->var_weight(v));
  for (std::size_t j = 0; j < r.c_.size(); ++j) {
    const int up = space_->raise(v, static_cast<int>(j));
    r.c_[j] = space_->monomial(up).exp[v] * c_[up];
  }
  return r;
}

Jet Jet::integrate_time() const {
  const int tv = space_->time_var();
  Jet r(*space_, degree_ + 2);
  for (std::size_t j = 0; j < c_.size(); ++j) {
    const int up = space_->raise(tv, static_cast<int>(j));
    if (up >= 0 && up < static_cast<int>(r.c_.size()))
      r.c_[up] = c_[j] / space_->monomial(up).exp[tv];
  }
  return r;
}

Jet Jet::truncated(int degree) const {
  Jet r = *this;
  if (degree < degree_) {
    r.degree_ = degree;
    r.c_.resize(static_cast<std::size_t>(space_->size(degree)));
  }
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  assert(space_ == o.space_);
  if (o.degree_ < degree_) *this = truncated(o.degree_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  assert(space_ == o.space_);
  if (o.degree_ < degree_) *this = truncated(o.degree_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  assert(a.space_ == b.space_);
  Jet r(*a.space_, std::min(a.degree_, b.degree_));
  const double* pa = a.c_.data();
  const double* pb = b.c_.data();
  double* pr = r.c_.data();
  for (const JetSpace::Pair& p : a.space_->pairs(r.degree_)) pr[p.c] += pa[p.a] * pb[p.b];
  return r;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

Jet& Jet::operator+=(double s) {
  if (!c_.empty()) c_[0] += s;
  return *this;
}

Jet& Jet::operator-=(double s) {
  if (!c_.empty()) c_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

Jet& Jet::operator/=(double s) {
  for (double& x : c_) x /= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& x : r.c_) x = -x;
  return r;
}

Jet compose(const Jet& a, std::span<const double> taylor) {
  const int d = a.degree_;
  Jet u = a;
  if (d < 0) return u;
  u.c_[0] = 0.0;
  Jet r = Jet::constant(*a.space_, d, taylor[d]);
  for (int k = d - 1; k >= 0; --k) {
    r = u * r;
    r.c_[0] += taylor[k];
  }
  return r;
}

Jet reciprocal(const Jet& a) {
  const double a0 = a.value();
  if (a0 == 0.0) throw SingularMetric("reciprocal of a jet with zero value");
  std::vector<double> t(std::max(a.degree(), 0) + 1);
  double p = 1.0 / a0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = (k % 2 == 0 ? 1.0 : -1.0) * p;
    p /= a0;
  }
  return compose(a, t);
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
Jet operator/(double s, const Jet& a) { return s * reciprocal(a); }

Jet pow(const Jet& a, double p) {
  const double a0 = a.value();
  std::vector<double> t(std::max(a.degree(), 0) + 1);
  double binom = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = binom * std::pow(a0, p - static_cast<double>(k));
    binom *= (p - static_cast<double>(k)) / static_cast<double>(k + 1);
  }
  return compose(a, t);
}

Jet sqrt(const Jet& a) { return pow(a, 0.5); }

Jet exp(const Jet& a) {
  const double e0 = std::exp(a.value());
  std::vector<double> t(std::max(a.degree(), 0) + 1);
  double fact = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    t[k] = e0 / fact;
  }
  return compose(a, t);
}

Jet log(const Jet& a) {
  const double a0 = a.value();
  std::vector<double> t(std::max(a.degree(), 0) + 1);
  t[0] = std::log(a0);
  double p = 1.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    p /= a0;
    t[k] = (k % 2 == 1 ? 1.0 : -1.0) * p / static_cast<double>(k);
  }
  return compose(a, t);
}

namespace {

Jet trig(const Jet& a, bool is_sin) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  // derivative cycle of sin: s, c, -s, -c; of cos: c, -s, -c, s
  const double cyc_sin[4] = {s, c, -s, -c};
  const double cyc_cos[4] = {c, -s, -c, s};
  std::vector<double> t(std::max(a.degree(), 0) + 1);
  double fact = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    t[k] = (is_sin ? cyc_sin[k % 4] : cyc_cos[k % 4]) / fact;
  }
  return compose(a, t);
}

}  // namespace

Jet sin(const Jet& a) { return trig(a, true); }
Jet cos(const Jet& a) { return trig(a, false); }

}  // namespace riccilab
