#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <span>
#include <vector>

#include "riccilab/jet.hpp"

namespace riccilab {

inline constexpr int kMaxRank = 6;

/// Dense component table with `rank` indices each ranging over [0, dim).
/// Index placement (upper/lower) is a property of the quantity, not of the
/// container; every library tensor documents its placement.
template <class T>
class Tensor {
 public:
  using Index = std::array<int, kMaxRank>;

  Tensor() = default;
  Tensor(int dim, int rank, T fill) : dim_(dim), rank_(rank) {
    assert(rank <= kMaxRank);
    std::size_t n = 1;
    for (int r = 0; r < rank; ++r) n *= static_cast<std::size_t>(dim);
    data_.assign(n, std::move(fill));
  }

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <class... I>
  T& operator()(I... idx) {
    return data_[flat_of(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[flat_of(idx...)];
  }

  std::size_t flat(const Index& idx) const {
    std::size_t f = 0;
    for (int r = 0; r < rank_; ++r) f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx[r]);
    return f;
  }
  Index unravel(std::size_t f) const {
    Index idx{};
    for (int r = rank_ - 1; r >= 0; --r) {
      idx[r] = static_cast<int>(f % static_cast<std::size_t>(dim_));
      f /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  template <class... I>
  std::size_t flat_of(I... idx) const {
    assert(static_cast<int>(sizeof...(I)) == rank_);
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }

  int dim_ = 0;
  int rank_ = 0;
  std::vector<T> data_;
};

using TensorJ = Tensor<Jet>;
using TensorD = Tensor<double>;

/// Coordinate conventions for derivative indices. Spatial tables use indices
/// 0..n-1 for x^1..x^n; space-time tables use 0 for t and 1..n for x^1..x^n.
struct Chart {
  int nx = 2;
  bool spacetime = false;

  int dim() const { return spacetime ? nx + 1 : nx; }
  int jet_var(int idx) const { return spacetime ? (idx == 0 ? nx : idx - 1) : idx; }
};

inline Jet zero_jet(const JetSpace& space, int degree) { return Jet(space, degree); }

inline TensorJ zero_tensor(const JetSpace& space, int degree, int dim, int rank) {
  return TensorJ(dim, rank, Jet(space, degree));
}

/// Value (coefficient zero) of every component.
inline TensorD values(const TensorJ& t) {
  TensorD out(t.dim(), t.rank(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].value();
  return out;
}

inline double max_abs(const TensorD& t) {
  double m = 0.0;
  for (double x : t) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_value(const TensorJ& t) {
  double m = 0.0;
  for (const Jet& x : t) m = std::max(m, std::abs(x.value()));
  return m;
}

inline int min_degree(const TensorJ& t) {
  int d = kMaxJetOrder;
  for (const Jet& x : t) d = std::min(d, x.degree());
  return d;
}

/// Partial derivative of every component; the derivative index comes first.
TensorJ partial(const TensorJ& t, const Chart& chart);

/// a - b componentwise.
TensorJ difference(const TensorJ& a, const TensorJ& b);

/// Inverse of a symmetric matrix of jets by Gauss-Jordan elimination with
/// partial pivoting on the values. Throws SingularMetric below `det_floor`.
TensorJ inverse(const TensorJ& m, double det_floor = 1e-12);

/// Determinant of a small matrix of jets (cofactor expansion, dim <= 4).
Jet determinant(const TensorJ& m);

}  // namespace riccilab
