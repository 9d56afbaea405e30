#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riccilab/errors.hpp"
#include "riccilab/jets.hpp"
#include "riccilab/riemann.hpp"

using namespace riccilab;

namespace {

ChartPoint at(std::vector<double> x, double t) { return ChartPoint{std::move(x), t}; }

double dt(const Jet& j) {
  Exponents e{};
  e[j.space().time_var()] = 1;
  return j.derivative(e);
}

struct Geometry {
  MetricJet jet;
  SpatialConnection conn;
  CurvaturePack curv;
};

Geometry geometry(const SolutionProvider& p, const ChartPoint& pt, int order) {
  Geometry g{eval_metric_jet(p, pt, order), {}, {}};
  g.conn = christoffel(g.jet);
  g.curv = curvature(g.jet, g.conn);
  return g;
}

}  // namespace

TEST_CASE("flat torus has vanishing connection and curvature") {
  const auto flat = make_flat_torus(2);
  const Geometry g = geometry(*flat, at({1.0, 2.0}, 0.3), 4);
  CHECK(max_abs_value(g.conn.gamma) == 0.0);
  CHECK(max_abs_value(g.curv.riem) == 0.0);
  CHECK(g.curv.scalar.value() == 0.0);
  CHECK(g.jet.value(0, 0) == 1.0);
  CHECK(g.jet.partial(0, 1, {1, 0, 0, 0}) == 0.0);
}

TEST_CASE("round sphere curvature at the origin") {
  // R = n(n-1)/r^2 with r^2 = r0^2 - 2(n-1)t; Rc = (n-1)/r^2 g
  for (int n : {2, 3}) {
    const auto s = make_round_sphere(n, 1.0);
    const Geometry g = geometry(*s, at(std::vector<double>(n, 0.0), 0.0), 4);
    CHECK(g.curv.scalar.value() == doctest::Approx(n * (n - 1)).epsilon(1e-12));
    CHECK(max_abs_value(g.conn.gamma) < 1e-15);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        CHECK(std::abs(g.curv.ricci(i, j).value() - (n - 1) * g.jet.value(i, j)) < 1e-12);
    CHECK(g.jet.value(0, 0) == doctest::Approx(4.0));
  }
}

TEST_CASE("round sphere scalar curvature at random points and times") {
  CounterRng rng(7, "sphere");
  for (int n : {2, 3}) {
    const auto s = make_round_sphere(n, 1.0);
    for (int k = 0; k < 20; ++k) {
      const ChartPoint p = s->sample_point(rng);
      const Geometry g = geometry(*s, p, 2);
      const double r2 = 1.0 - 2.0 * (n - 1) * p.time;
      CHECK(std::abs(g.curv.scalar.value() - n * (n - 1) / r2) < 1e-8);
    }
  }
}

TEST_CASE("cigar scalar curvature") {
  // conformal factor e^{2u} = 1/(c + r^2), c = e^{4t}: R = 4c / (c + r^2)
  const auto cigar = make_cigar();
  CHECK(geometry(*cigar, at({0.0, 0.0}, 0.0), 2).curv.scalar.value() == doctest::Approx(4.0).epsilon(1e-12));
  CounterRng rng(3, "cigar");
  for (int k = 0; k < 20; ++k) {
    const ChartPoint p = cigar->sample_point(rng);
    const double c = std::exp(4.0 * p.time);
    const double r2 = p.coords[0] * p.coords[0] + p.coords[1] * p.coords[1];
    CHECK(std::abs(geometry(*cigar, p, 2).curv.scalar.value() - 4.0 * c / (c + r2)) < 1e-8);
  }
}

TEST_CASE("every closed-form provider solves the flow equation") {
  CounterRng rng(11, "flow");
  std::vector<ProviderPtr> providers;
  for (const auto& name : closed_form_provider_names()) providers.push_back(provider_from_name(name));
  for (const auto& name : closed_form_provider_names()) providers.push_back(make_pulled_back(provider_from_name(name), 5));
  for (const auto& prov : providers) {
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const ChartPoint p = prov->sample_point(rng);
      const Geometry g = geometry(*prov, p, 3);
      const TensorJ v = prov->shift_jet(p, 3);
      const TensorJ lie = symmetrized_sum(cov_deriv(g.conn, v));
      for (int i = 0; i < prov->dim(); ++i)
        for (int j = 0; j < prov->dim(); ++j)
          worst = std::max(worst, std::abs(dt(g.jet.g(i, j)) + 2.0 * g.curv.ricci(i, j).value() - lie(i, j).value()));
    }
    INFO(prov->id());
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("pulled-back shift is not a gradient") {
  const auto p = make_pulled_back(make_cigar(), 9);
  const ChartPoint pt = at({0.4, -0.3}, 0.2);
  const TensorJ v = p->shift_jet(pt, 3);
  const double curl = v(1).d(0).value() - v(0).d(1).value();
  CHECK(std::abs(curl) > 1e-3);
}

TEST_CASE("sign self-validation: Ricci solves the linearized equation on spheres") {
  CounterRng rng(2024, "sign");
  for (int n : {2, 3}) {
    const auto s = make_round_sphere(n, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const ChartPoint p = s->sample_point(rng);
      const Geometry g = geometry(*s, p, 4);
      CHECK(g.curv.scalar.value() > 0.0);
      const TensorJ lich = lichnerowicz(g.jet, g.conn, g.curv, g.curv.ricci);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(dt(g.curv.ricci(i, j)) - lich(i, j).value()));
    }
    CHECK(worst <= 1e-7);
  }
}

TEST_CASE("Bianchi identities and symmetries") {
  CounterRng rng(5, "bianchi");
  std::vector<ProviderPtr> providers = {make_cigar(), make_round_sphere(3, 1.0), make_sphere_cross_flat(1.0),
                                        make_pulled_back(make_round_sphere(3, 1.0), 3),
                                        make_pulled_back(make_cigar(), 4)};
  for (const auto& prov : providers) {
    const int n = prov->dim();
    for (int k = 0; k < 10; ++k) {
      const ChartPoint p = prov->sample_point(rng);
      const Geometry g = geometry(*prov, p, 3);
      const DivergencePack dp = divergence(g.jet, g.conn, g.curv, g.curv.ricci);
      for (int i = 0; i < n; ++i) CHECK(std::abs(dp.div(i).value() - 0.5 * g.curv.dscalar(i).value()) < 1e-8);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          CHECK(std::abs(g.curv.ricci(i, j).value() - g.curv.ricci(j, i).value()) < 1e-10);
          CHECK(std::abs(g.conn.gamma(0, i, j).value() - g.conn.gamma(0, j, i).value()) == 0.0);
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
              CHECK(std::abs(g.curv.riem(i, j, a, b).value() + g.curv.riem(j, i, a, b).value()) < 1e-12);
              const double first = g.curv.riem(i, j, a, b).value() + g.curv.riem(j, a, i, b).value() +
                                    g.curv.riem(a, i, j, b).value();
              CHECK(std::abs(first) < 1e-9);
              CHECK(std::abs(g.curv.riem_low(i, j, a, b).value() - g.curv.riem_low(a, b, i, j).value()) < 1e-9);
            }
        }
      if (n == 2)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            CHECK(std::abs(g.curv.ricci(i, j).value() - 0.5 * g.curv.scalar.value() * g.jet.value(i, j)) < 1e-9);
    }
  }
}

TEST_CASE("Ricci identity on a random 1-form") {
  // nabla_p nabla_q w_i - nabla_q nabla_p w_i = -R_pqi^l w_l
  CounterRng rng(8, "ricci-identity");
  const auto prov = make_pulled_back(make_round_sphere(3, 1.0), 21);
  const RandomField w(3, 1, false, 99);
  for (int k = 0; k < 5; ++k) {
    const ChartPoint p = prov->sample_point(rng);
    const Geometry g = geometry(*prov, p, 3);
    const TensorJ wj = w.jet(jet_space(3), 3, p);
    const TensorJ dd = cov_deriv(g.conn, cov_deriv(g.conn, wj));  // (p, q, i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int i = 0; i < 3; ++i) {
          double rhs = 0.0;
          for (int l = 0; l < 3; ++l) rhs -= g.curv.riem(a, b, i, l).value() * wj(l).value();
          CHECK(std::abs(dd(a, b, i).value() - dd(b, a, i).value() - rhs) < 1e-8);
        }
  }
}

TEST_CASE("metric compatibility and parallel Ricci on spheres") {
  const auto s = make_round_sphere(2, 1.0);
  const Geometry g = geometry(*s, at({0.7, -1.1}, 0.1), 3);
  CHECK(max_abs(values(cov_deriv(g.conn, g.jet.g))) < 1e-12);
  CHECK(max_abs(values(g.curv.dricci)) < 1e-12);
}

TEST_CASE("divergence quantities on the 2-sphere") {
  const auto s = make_round_sphere(2, 1.0);
  const double t = 0.1;
  const double K = 1.0 / (1.0 - 2.0 * t);
  const Geometry g = geometry(*s, at({0.5, 0.8}, t), 4);
  const DivergencePack dp = divergence(g.jet, g.conn, g.curv, g.curv.ricci);
  CHECK(std::abs(dp.div_div.value()) < 1e-10);
  CHECK(dp.rc_dot_h.value() == doctest::Approx(2 * K * K));
  CHECK(dp.trace.value() == doctest::Approx(2 * K));
  const TensorJ lg = lichnerowicz(g.jet, g.conn, g.curv, g.jet.g);
  CHECK(max_abs(values(lg)) < 1e-10);
  // constant h on the flat torus
  const auto flat = make_flat_torus(2);
  const Geometry f = geometry(*flat, at({0.5, 0.8}, 0.0), 3);
  TensorJ h(2, 2, Jet::constant(jet_space(2), 3, 0.4));
  h(0, 0) = Jet::constant(jet_space(2), 3, 1.5);
  const DivergencePack fp = divergence(f.jet, f.conn, f.curv, h);
  CHECK(max_abs(values(fp.div)) == 0.0);
  CHECK(fp.div_div.value() == 0.0);
  CHECK(max_abs(values(lichnerowicz(f.jet, f.conn, f.curv, h))) == 0.0);
}

TEST_CASE("provider errors") {
  const auto s = make_round_sphere(2, 1.0);
  CHECK_THROWS_AS(eval_metric_jet(*s, at({0.0, 0.0}, 0.5), 2), PointOutOfChart);
  CHECK_THROWS_AS(eval_metric_jet(*s, at({0.0, 0.0}, -0.1), 2), PointOutOfChart);
  CHECK_THROWS_AS(eval_metric_jet(*s, at({0.0, 0.0, 0.0}, 0.1), 2), PointOutOfChart);
  CHECK_THROWS_AS(eval_metric_jet(*s, at({0.0, 0.0}, 0.1), kMaxProviderOrder + 1), OrderUnsupported);
  CHECK_THROWS_AS(provider_from_name("torus9"), ProviderUnavailable);
  CHECK_THROWS_AS(eval_h_jet(*s, HFamily::GridEvolved, at({0.0, 0.0}, 0.1), 2), ProviderUnavailable);
  const TensorJ h = eval_h_jet(*make_flat_torus(2), HFamily::Ricci, at({1.0, 1.0}, 0.1), 2);
  CHECK(max_abs(values(h)) == 0.0);
}
