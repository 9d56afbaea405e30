#pragma once

// Truncated multivariate Taylor series ("jets") in the chart coordinates
// x^1..x^n and time t about a base point.
//
// Truncation uses the parabolic weight |alpha| + 2m for the monomial
// x^alpha t^m, so a spatial derivative lowers the valid degree by one and a
// time derivative lowers it by two. This matches the scaling of the heat-type
// equations in the library: an operator with two spatial derivatives followed
// by a time integration maps degree-K jets back to degree-K jets.

#include <array>
#include <span>
#include <vector>

namespace riccilab {

inline constexpr int kMaxSpatialDim = 3;
inline constexpr int kMaxJetOrder = 10;

using Exponents = std::array<int, kMaxSpatialDim + 1>;

struct Monomial {
  Exponents exp{};  // exp[0..nx-1] spatial, exp[nx] time
  int weight = 0;
};

class JetSpace {
 public:
  struct Pair {
    int a;
    int b;
    int c;
  };

  // Shared, immutable instance for (nx, max_order); thread-safe.
  static const JetSpace& get(int nx, int max_order);

  int nx() const { return nx_; }
  int nvars() const { return nx_ + 1; }
  int time_var() const { return nx_; }
  int max_order() const { return max_order_; }
  int var_weight(int v) const { return v == nx_ ? 2 : 1; }

  // Number of monomials with weight <= degree.
  int size(int degree) const;
  const Monomial& monomial(int idx) const { return monos_[idx]; }
  int index_of(const Exponents& e) const;

  // Multiplication pairs producing monomials of weight <= degree.
  std::span<const Pair> pairs(int degree) const;
  // Index of monomial idx * x_v (or -1 past max_order).
  int raise(int v, int idx) const { return raise_[v][idx]; }

  JetSpace(int nx, int max_order);

 private:
  int nx_;
  int max_order_;
  std::vector<Monomial> monos_;
  std::vector<int> size_by_degree_;
  std::vector<Pair> pairs_;
  std::vector<int> pairs_by_degree_;
  std::array<std::vector<int>, kMaxSpatialDim + 1> raise_;
};

class Jet {
 public:
  Jet() = default;
  Jet(const JetSpace& space, int degree);

  static Jet constant(const JetSpace& space, int degree, double value);
  // Coordinate variable v expanded about `value`.
  static Jet variable(const JetSpace& space, int degree, int v, double value);

  const JetSpace& space() const { return *space_; }
  bool valid() const { return space_ != nullptr; }
  int degree() const { return degree_; }
  std::size_t size() const { return c_.size(); }

  // Value at the base point; throws InsufficientJet when degree < 0.
  double value() const;
  double coeff(int idx) const { return c_[idx]; }
  double& coeff(int idx) { return c_[idx]; }
  std::span<const double> coeffs() const { return c_; }
  // Partial derivative d^alpha f at the base point.
  double derivative(const Exponents& alpha) const;

  Jet d(int v) const;
  // Integral in time from the base time, i.e. the antiderivative vanishing at
  // t = t0. Degree rises by two, capped at the space's max order.
  Jet integrate_time() const;
  Jet truncated(int degree) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);
  Jet operator-() const;

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a);

 private:
  friend Jet compose(const Jet& a, std::span<const double> taylor);

  const JetSpace* space_ = nullptr;
  int degree_ = -1;
  std::vector<double> c_;
};

// f(a) from the Taylor coefficients f^(k)(a0)/k!, k = 0..degree.
Jet compose(const Jet& a, std::span<const double> taylor);

Jet reciprocal(const Jet& a);
Jet sqrt(const Jet& a);
Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet pow(const Jet& a, double p);

}  // namespace riccilab
