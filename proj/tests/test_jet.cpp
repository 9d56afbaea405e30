#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riccilab/errors.hpp"
#include "riccilab/jets.hpp"
#include "riccilab/riemann.hpp"

using namespace riccilab;

namespace {

const JetSpace& S2() { return jet_space(2); }

Jet X(int deg, double v = 0.3) { return Jet::variable(S2(), deg, 0, v); }
Jet Y(int deg, double v = -0.7) { return Jet::variable(S2(), deg, 1, v); }
Jet T(int deg, double v = 0.2) { return Jet::variable(S2(), deg, 2, v); }

}  // namespace

TEST_CASE("monomials are ordered by weight") {
  const JetSpace& s = S2();
  int prev = 0;
  for (int i = 0; i < s.size(kMaxJetOrder); ++i) {
    CHECK(s.monomial(i).weight >= prev);
    prev = s.monomial(i).weight;
  }
  // weight <= 2 in (x, y, t): 1, x, y, x^2, xy, y^2, t
  CHECK(s.size(2) == 7);
  CHECK(s.size(0) == 1);
}

TEST_CASE("products and derivatives of polynomials") {
  const int deg = 6;
  const Jet f = X(deg) * X(deg) * Y(deg) + 3.0 * T(deg) * X(deg);
  // f = x^2 y + 3 t x at (0.3, -0.7, 0.2)
  CHECK(f.value() == doctest::Approx(0.09 * -0.7 + 3 * 0.2 * 0.3));
  CHECK(f.derivative({1, 0, 0, 0}) == doctest::Approx(2 * 0.3 * -0.7 + 3 * 0.2));
  CHECK(f.derivative({2, 1, 0, 0}) == doctest::Approx(2.0));
  CHECK(f.derivative({1, 0, 1, 0}) == doctest::Approx(3.0));
  CHECK(f.derivative({0, 0, 1, 0}) == doctest::Approx(3 * 0.3));
  CHECK(f.d(0).d(0).d(1).value() == doctest::Approx(2.0));
  CHECK(f.d(2).d(0).value() == doctest::Approx(3.0));
}

TEST_CASE("time derivative lowers the degree by two") {
  const Jet f = T(6) * X(6);
  CHECK(f.d(2).degree() == 4);
  CHECK(f.d(0).degree() == 5);
  CHECK_THROWS_AS(X(1).d(0).d(0).value(), InsufficientJet);
}

TEST_CASE("elementary functions match closed forms") {
  const int deg = 8;
  const Jet u = X(deg) + 2.0 * Y(deg) + T(deg);  // value 0.3 - 1.4 + 0.2 = -0.9
  const double u0 = -0.9;
  // d^k/dx^k of g(u) = g^(k)(u)
  const Jet e = exp(u);
  CHECK(e.derivative({3, 0, 0, 0}) == doctest::Approx(std::exp(u0)));
  CHECK(e.derivative({0, 2, 0, 0}) == doctest::Approx(4 * std::exp(u0)));
  CHECK(e.derivative({0, 0, 2, 0}) == doctest::Approx(std::exp(u0)));
  const Jet s = sin(u);
  CHECK(s.derivative({5, 0, 0, 0}) == doctest::Approx(std::cos(u0)));
  CHECK(cos(u).derivative({2, 0, 0, 0}) == doctest::Approx(-std::cos(u0)));
  const Jet w = 2.0 + u;  // 1.1
  CHECK(log(w).derivative({3, 0, 0, 0}) == doctest::Approx(2.0 / std::pow(1.1, 3)));
  CHECK(reciprocal(w).derivative({4, 0, 0, 0}) == doctest::Approx(24.0 / std::pow(1.1, 5)));
  CHECK(sqrt(w).derivative({2, 0, 0, 0}) == doctest::Approx(-0.25 * std::pow(1.1, -1.5)));
  CHECK(pow(w, -2.0).derivative({0, 0, 1, 0}) == doctest::Approx(-2.0 * std::pow(1.1, -3)));
}

TEST_CASE("quotient of jets is consistent") {
  const int deg = 7;
  const Jet a = 1.0 + X(deg) * Y(deg);
  const Jet b = 2.0 + sin(X(deg) + T(deg));
  const Jet q = a / b;
  const Jet back = q * b;
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back.coeff(static_cast<int>(i)) == doctest::Approx(a.coeff(static_cast<int>(i))).epsilon(1e-12));
}

TEST_CASE("time integration inverts time differentiation") {
  const Jet f = exp(X(8) - 0.5 * T(8)) * Y(8);
  const Jet g = f.d(2).integrate_time();
  CHECK(g.degree() == 8);
  // g = f - f(t0) in the time variable: all coefficients with a t power agree
  for (int i = 0; i < static_cast<int>(g.size()); ++i) {
    if (S2().monomial(i).exp[2] == 0) {
      CHECK(g.coeff(i) == 0.0);
    } else {
      CHECK(g.coeff(i) == doctest::Approx(f.coeff(i)));
    }
  }
}

TEST_CASE("matrix inverse and determinant of jets") {
  const int deg = 5;
  TensorJ m(2, 2, Jet());
  m(0, 0) = 2.0 + X(deg) * X(deg);
  m(0, 1) = 0.3 * sin(Y(deg));
  m(1, 0) = m(0, 1);
  m(1, 1) = 1.0 + exp(T(deg));
  const TensorJ inv = inverse(m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Jet p = m(i, 0) * inv(0, j) + m(i, 1) * inv(1, j);
      for (int c = 0; c < static_cast<int>(p.size()); ++c)
        CHECK(p.coeff(c) == doctest::Approx(i == j && c == 0 ? 1.0 : 0.0).epsilon(1e-12));
    }
  const Jet det = determinant(m);
  CHECK(det.value() == doctest::Approx(m(0, 0).value() * m(1, 1).value() - m(0, 1).value() * m(0, 1).value()));
  TensorJ sing(2, 2, Jet::constant(S2(), deg, 1.0));
  CHECK_THROWS_AS(inverse(sing), SingularMetric);
}

TEST_CASE("jet space rejects unsupported orders") {
  CHECK_THROWS_AS(JetSpace(2, kMaxJetOrder + 1), OrderUnsupported);
  CHECK_THROWS_AS(JetSpace(4, 2), OrderUnsupported);
}
