#include "riccilab/harnack.hpp"

#include <algorithm>
#include <cmath>

#include "riccilab/errors.hpp"

namespace riccilab {

namespace {

std::vector<double> raise(const TensorD& g_inv, const std::vector<double>& form) {
  const int n = g_inv.dim();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += g_inv(i, j) * form[j];
  return out;
}

TensorD inverse_values(const TensorD& m) {
  const int n = m.dim();
  TensorD a = m;
  TensorD inv(n, 2, 0.0);
  for (int i = 0; i < n; ++i) inv(i, i) = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (a(piv, c) == 0.0) throw SingularMetric("singular matrix");
    for (int k = 0; k < n; ++k) {
      std::swap(a(c, k), a(piv, k));
      std::swap(inv(c, k), inv(piv, k));
    }
    const double p = a(c, c);
    for (int k = 0; k < n; ++k) {
      a(c, k) /= p;
      inv(c, k) /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (int k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

void require_positive_time(double t) {
  if (!(t > 0.0)) throw NonPositiveTime("t = " + std::to_string(t));
}

}  // namespace

HarnackFrame random_frame(int n, CounterRng& rng, double scale) {
  HarnackFrame f;
  f.V.resize(n);
  f.W.resize(n);
  for (int i = 0; i < n; ++i) {
    f.V[i] = scale * rng.normal();
    f.W[i] = scale * rng.normal();
  }
  f.U = TensorD(n, 2, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      f.U(i, j) = scale * rng.normal();
      f.U(j, i) = -f.U(i, j);
    }
  return f;
}

HarnackPoint harnack_point(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                           const CotensorJet& h) {
  HarnackPoint hp;
  hp.t = jet.point.time;
  hp.g = values(jet.g);
  hp.g_inv = values(jet.g_inv);
  hp.h = values(h);
  const DivergencePack dp = divergence(jet, conn, curv, h);
  hp.div = values(dp.div);
  hp.div_div = dp.div_div.value();
  hp.rc_dot_h = dp.rc_dot_h.value();
  hp.trace = dp.trace.value();
  hp.ht = values(extend_h(jet, conn, curv, h));
  return hp;
}

double dt_scalar_under_flow(const MetricJet& jet, const CurvaturePack& curv) {
  const int n = jet.dim();
  double lap = 0.0, rc2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      lap += jet.g_inv(i, j).value() * curv.d2scalar(i, j).value();
      rc2 += curv.ricci_mixed(i, j).value() * curv.ricci_mixed(j, i).value();
    }
  return lap + 2.0 * rc2;
}

double trace_quadratic(const MetricJet& jet, const CurvaturePack& curv, double dt_scalar, const HarnackFrame& frame,
                       double t) {
  require_positive_time(t);
  const int n = jet.dim();
  const std::vector<double> v = raise(values(jet.g_inv), frame.V);
  double z = dt_scalar + curv.scalar.value() / t;
  for (int i = 0; i < n; ++i) {
    z += 2.0 * curv.dscalar(i).value() * v[i];
    for (int j = 0; j < n; ++j) z += 2.0 * curv.ricci(i, j).value() * v[i] * v[j];
  }
  return z;
}

QuadraticValue linear_trace_Z(const HarnackPoint& hp, const HarnackFrame& frame, bool include_time_term) {
  if (include_time_term) require_positive_time(hp.t);
  const int n = hp.g.dim();
  const std::vector<double> v = raise(hp.g_inv, frame.V);
  const double s = frame.vt0;
  double div_v = 0.0, hvv = 0.0;
  for (int i = 0; i < n; ++i) {
    div_v += hp.div(i) * v[i];
    for (int j = 0; j < n; ++j) hvv += hp.h(i, j) * v[i] * v[j];
  }
  QuadraticValue q;
  q.parts = {{"div_div", s * s * hp.div_div},
             {"rc_dot_h", s * s * hp.rc_dot_h},
             {"div_h_V", 2.0 * s * div_v},
             {"h_V_V", hvv}};
  if (include_time_term) q.parts.emplace_back("H_over_2t", hp.trace / (2.0 * hp.t));
  for (const auto& [label, x] : q.parts) q.value += x;

  std::vector<double> vt(n + 1);
  vt[0] = s;
  for (int i = 0; i < n; ++i) vt[i + 1] = v[i];
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) q.contraction += hp.ht(i, j) * vt[i] * vt[j];
  if (include_time_term)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q.contraction += hp.g_inv(i, j) * hp.ht(i + 1, j + 1) / (2.0 * hp.t);
  return q;
}

TensorD harnack_matrix(const MetricJet& jet, const CurvaturePack& curv) {
  const int n = jet.dim();
  const TensorD gi = values(jet.g_inv);
  const TensorD rc = values(curv.ricci);
  const TensorD rm = values(curv.riem_low);
  TensorD rc_up(n, 2, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) rc_up(i, j) += gi(i, a) * gi(j, b) * rc(a, b);
  TensorD m(n, 2, 0.0);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      double x = curv.lap_ricci(p, q).value() - 0.5 * curv.d2scalar(p, q).value();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x += 2.0 * rm(p, i, j, q) * rc_up(i, j);
      for (int r = 0; r < n; ++r) x -= rc(p, r) * curv.ricci_mixed(r, q).value();
      m(p, q) = x;
    }
  return m;
}

QPair matrix_Q(const MetricJet& jet, const CurvaturePack& curv, const SpaceTimeCurvature& stcurv,
               const SpaceTimeCometric& gt, const HarnackFrame& frame) {
  const int n = jet.dim();
  if (stcurv.riem.size() == 0 || stcurv.riem.dim() != n + 1)
    throw MissingCurvature("space-time curvature not built for this point");
  const TensorD gi = values(jet.g_inv);
  const TensorD m = harnack_matrix(jet, curv);
  const std::vector<double> w = raise(gi, frame.W);
  TensorD u_up(n, 2, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) u_up(i, j) += gi(i, a) * gi(j, b) * frame.U(a, b);

  QPair q;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      q.explicit_form += m(i, j) * w[i] * w[j];
      for (int k = 0; k < n; ++k) {
        const double comm = curv.dricci(i, j, k).value() - curv.dricci(j, i, k).value();
        q.explicit_form -= 2.0 * comm * u_up(i, j) * w[k];
        for (int l = 0; l < n; ++l) q.explicit_form += curv.riem_low(i, j, k, l).value() * u_up(i, j) * u_up(l, k);
      }
    }

  // T_i^j on space-time; row 0 vanishes
  const int d = n + 1;
  TensorD tt(d, 2, 0.0);
  for (int i = 0; i < n; ++i) {
    tt(i + 1, 0) = frame.W[i];
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a) tt(i + 1, j + 1) += frame.U(i, a) * gi(a, j);
  }
  for (int i = 1; i < d; ++i)
    for (int p = 1; p < d; ++p) {
      const double gip = gt.gt_inv(i, p).value();
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 1; l < d; ++l) q.contraction += gip * stcurv.riem(p, j, k, l).value() * tt(i, j) * tt(l, k);
    }
  return q;
}

OptimalV optimal_V(const HarnackPoint& hp, double min_eigenvalue) {
  require_positive_time(hp.t);
  const int n = hp.h.dim();
  const double lo = symmetric_eigenvalues(hp.h).front();
  if (lo < min_eigenvalue) throw DegenerateH("smallest eigenvalue of h is " + std::to_string(lo));
  const TensorD hinv = inverse_values(hp.h);
  OptimalV out;
  out.vector.assign(n, 0.0);
  out.form.assign(n, 0.0);
  double quad = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.vector[i] -= hinv(i, j) * hp.div(j);
      quad += hinv(i, j) * hp.div(i) * hp.div(j);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.form[i] += hp.g(i, j) * out.vector[j];
  out.z_min = hp.ht(0, 0) - quad + hp.trace / (2.0 * hp.t);
  return out;
}

std::vector<double> symmetric_eigenvalues(const TensorD& m) {
  const int n = m.dim();
  TensorD a = m;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / a(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace riccilab
