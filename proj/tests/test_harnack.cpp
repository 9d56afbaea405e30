#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riccilab/errors.hpp"
#include "riccilab/harnack.hpp"

using namespace riccilab;

namespace {

ChartPoint at(std::vector<double> x, double t) { return ChartPoint{std::move(x), t}; }

std::vector<ProviderPtr> plain_flows() {
  return {make_round_sphere(2, 1.0), make_round_sphere(3, 1.3), make_cigar(), make_sphere_cross_flat(1.1)};
}

struct Point {
  SpaceTimePoint st;
  HarnackPoint hp;
};

Point ricci_point(const SolutionProvider& p, const ChartPoint& pt) {
  Point out{spacetime_point(p, pt, 6), {}};
  out.hp = harnack_point(out.st.jet, out.st.conn, out.st.curv, eval_h_jet(p, HFamily::Ricci, pt, 4));
  return out;
}

}  // namespace

TEST_CASE("shrinking 2-sphere values at t = 0.1") {
  const auto s2 = make_round_sphere(2, 1.0);
  const Point p = ricci_point(*s2, at({0.0, 0.0}, 0.1));
  HarnackFrame zero{{0.0, 0.0}, {0.0, 0.0}, TensorD(2, 2, 0.0), 1.0};
  const QuadraticValue z = linear_trace_Z(p.hp, zero, true);
  CHECK(z.value == doctest::Approx(15.625).epsilon(1e-10));
  CHECK(z.contraction == doctest::Approx(15.625).epsilon(1e-10));
  const double dtr = dt_scalar_under_flow(p.st.jet, p.st.curv);
  CHECK(trace_quadratic(p.st.jet, p.st.curv, dtr, zero, 0.1) == doctest::Approx(31.25).epsilon(1e-10));
  const OptimalV ov = optimal_V(p.hp);
  CHECK(std::abs(ov.vector[0]) + std::abs(ov.vector[1]) < 1e-12);
  CHECK(ov.z_min == doctest::Approx(15.625).epsilon(1e-10));
}

TEST_CASE("matrix quadratic on the unit 2-sphere with W = e1") {
  const auto s2 = make_round_sphere(2, 1.0);
  const SpaceTimePoint s = spacetime_point(*s2, at({0.0, 0.0}, 0.0), 6);
  HarnackFrame f{{0.0, 0.0}, {1.0, 0.0}, TensorD(2, 2, 0.0), 1.0};
  const QPair q = matrix_Q(s.jet, s.curv, s.stcurv, s.gt, f);
  // M = K^2 g with g_11 = 4 at the origin, W^1 = 1/4
  CHECK(q.explicit_form == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(q.contraction == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("flat torus") {
  const auto flat = make_flat_torus(2);
  const SpaceTimePoint s = spacetime_point(*flat, at({0.3, 0.2}, 0.5), 4);
  TensorJ delta = zero_tensor(s.jet.space(), 4, 2, 2);
  delta(0, 0) += 1.0;
  delta(1, 1) += 1.0;
  const HarnackPoint hp = harnack_point(s.jet, s.conn, s.curv, delta);
  const OptimalV ov = optimal_V(hp);
  CHECK(ov.z_min == doctest::Approx(2.0 / (2 * 0.5)));
  CounterRng rng(1, "flat");
  const HarnackFrame f = random_frame(2, rng);
  const QPair q = matrix_Q(s.jet, s.curv, s.stcurv, s.gt, f);
  CHECK(q.explicit_form == 0.0);
  CHECK(q.contraction == 0.0);
  CHECK(trace_quadratic(s.jet, s.curv, 0.0, f, 0.5) == 0.0);
}

TEST_CASE("parts and contraction agree and Z is quadratic in V") {
  for (const auto& p : plain_flows()) {
    CounterRng rng(2, p->id());
    const RandomField field(p->dim(), 2, true, 5);
    for (int trial = 0; trial < 4; ++trial) {
      const ChartPoint pt = p->sample_point(rng);
      if (pt.time <= 0.0) continue;
      const SpaceTimePoint s = spacetime_point(*p, pt, 4);
      const HarnackPoint hp = harnack_point(s.jet, s.conn, s.curv, field.jet(s.jet.space(), 4, pt));
      for (int k = 0; k < 25; ++k) {
        HarnackFrame f = random_frame(p->dim(), rng);
        f.vt0 = rng.uniform(-2.0, 2.0);
        const QuadraticValue z = linear_trace_Z(hp, f, true);
        CHECK(std::abs(z.value - z.contraction) <= 1e-12 * (1.0 + std::abs(z.value)));
        // Z(lambda V) = a + b lambda + c lambda^2 with a, b, c read from the parts
        double a = 0.0, b = 0.0, c = 0.0;
        for (const auto& [label, x] : z.parts) {
          if (label == "div_h_V") b += x;
          else if (label == "h_V_V") c += x;
          else a += x;
        }
        HarnackFrame scaled = f;
        for (double& v : scaled.V) v *= 1.7;
        const double z2 = linear_trace_Z(hp, scaled, true).value;
        CHECK(z2 == doctest::Approx(a + 1.7 * b + 1.7 * 1.7 * c).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("linear quadratic of Rc is half the trace quadratic") {
  for (const auto& p : plain_flows()) {
    CounterRng rng(3, p->id());
    for (int trial = 0; trial < 5; ++trial) {
      ChartPoint pt = p->sample_point(rng);
      pt.time = std::max(pt.time, 0.01);
      const Point hpnt = ricci_point(*p, pt);
      const double dtr = dt_scalar_under_flow(hpnt.st.jet, hpnt.st.curv);
      for (int k = 0; k < 10; ++k) {
        const HarnackFrame f = random_frame(p->dim(), rng);
        const double z = linear_trace_Z(hpnt.hp, f, true).value;
        const double tq = trace_quadratic(hpnt.st.jet, hpnt.st.curv, dtr, f, pt.time);
        CHECK(std::abs(2.0 * z - tq) < 1e-8 * (1.0 + std::abs(tq)));
      }
    }
  }
}

TEST_CASE("explicit and space-time forms of the matrix quadratic agree") {
  for (const auto& p : plain_flows()) {
    CounterRng rng(4, p->id());
    for (int trial = 0; trial < 5; ++trial) {
      const SpaceTimePoint s = spacetime_point(*p, p->sample_point(rng), 5);
      const TensorD m = harnack_matrix(s.jet, s.curv);
      for (int k = 0; k < 20; ++k) {
        HarnackFrame f = random_frame(p->dim(), rng);
        const QPair q = matrix_Q(s.jet, s.curv, s.stcurv, s.gt, f);
        CHECK(std::abs(q.explicit_form - q.contraction) < 1e-9 * (1.0 + std::abs(q.explicit_form)));
        // U = 0 leaves the M block
        f.U = TensorD(p->dim(), 2, 0.0);
        const QPair qw = matrix_Q(s.jet, s.curv, s.stcurv, s.gt, f);
        double mw = 0.0;
        for (int i = 0; i < p->dim(); ++i)
          for (int j = 0; j < p->dim(); ++j)
            for (int a = 0; a < p->dim(); ++a)
              for (int b = 0; b < p->dim(); ++b)
                mw += m(a, b) * s.jet.g_inv(a, i).value() * s.jet.g_inv(b, j).value() * f.W[i] * f.W[j];
        CHECK(qw.contraction == doctest::Approx(mw).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("optimal V minimizes Z") {
  for (const auto& p : plain_flows()) {
    CounterRng rng(5, p->id());
    const RandomField field(p->dim(), 2, true, 17, 0.3);
    for (int trial = 0; trial < 3; ++trial) {
      ChartPoint pt = p->sample_point(rng);
      pt.time = std::max(pt.time, 0.02);
      const SpaceTimePoint s = spacetime_point(*p, pt, 4);
      TensorJ h = field.jet(s.jet.space(), 4, pt);
      // g plus a perturbation small enough to stay positive definite
      const double eps = 0.3 * symmetric_eigenvalues(values(s.jet.g)).front() / max_abs_value(h);
      for (std::size_t f = 0; f < h.size(); ++f) h[f] = s.jet.g[f] + eps * h[f];
      const HarnackPoint hp = harnack_point(s.jet, s.conn, s.curv, h);
      const OptimalV ov = optimal_V(hp);
      HarnackFrame best = random_frame(p->dim(), rng);
      best.V = ov.form;
      CHECK(linear_trace_Z(hp, best, true).value == doctest::Approx(ov.z_min).epsilon(1e-10));
      for (int k = 0; k < 200; ++k) {
        HarnackFrame f = random_frame(p->dim(), rng, 2.0);
        CHECK(linear_trace_Z(hp, f, true).value >= ov.z_min - 1e-10);
      }
    }
  }
}

TEST_CASE("linear trace quadratic is nonnegative on shrinking spheres") {
  for (const auto& p : {make_round_sphere(2, 1.0), make_round_sphere(3, 1.3)}) {
    CounterRng rng(6, p->id());
    for (double t : {0.01, 0.05, 0.1}) {
      ChartPoint pt = p->sample_point(rng);
      pt.time = t;
      const Point hpnt = ricci_point(*p, pt);
      for (int k = 0; k < 300; ++k)
        CHECK(linear_trace_Z(hpnt.hp, random_frame(p->dim(), rng, 3.0), true).value >= -1e-9);
    }
  }
}

TEST_CASE("errors") {
  const auto s2 = make_round_sphere(2, 1.0);
  const Point p = ricci_point(*s2, at({0.1, 0.2}, 0.0));
  CounterRng rng(7, "errors");
  const HarnackFrame f = random_frame(2, rng);
  CHECK_THROWS_AS(linear_trace_Z(p.hp, f, true), NonPositiveTime);
  CHECK_NOTHROW(linear_trace_Z(p.hp, f, false));
  CHECK_THROWS_AS(trace_quadratic(p.st.jet, p.st.curv, 0.0, f, -1.0), NonPositiveTime);
  HarnackPoint degenerate = ricci_point(*s2, at({0.1, 0.2}, 0.1)).hp;
  degenerate.h(1, 1) = degenerate.h(0, 1) * degenerate.h(1, 0) / degenerate.h(0, 0);
  CHECK_THROWS_AS(optimal_V(degenerate), DegenerateH);
  CHECK_THROWS_AS(matrix_Q(p.st.jet, p.st.curv, SpaceTimeCurvature{}, p.st.gt, f), MissingCurvature);
}
