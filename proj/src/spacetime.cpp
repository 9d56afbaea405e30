#include "riccilab/spacetime.hpp"

#include "riccilab/errors.hpp"
#include "riccilab/mutation.hpp"

namespace riccilab {

namespace {

int max_degree(const TensorJ& t) {
  int d = -1;
  for (const Jet& x : t) d = std::max(d, x.degree());
  return d;
}

Jet exact_zero(const TensorJ& like) { return Jet(like[0].space(), max_degree(like)); }

std::size_t stride_of(const TensorJ& t, int slot) {
  std::size_t s = 1;
  for (int r = slot + 1; r < t.rank(); ++r) s *= static_cast<std::size_t>(t.dim());
  return s;
}

// Covariant derivative that never touches the structural zeros Gamma~^0 and,
// with `spatial`, skips the time derivative slab (left at degree -1 so any
// accidental use throws on evaluation).
TensorJ st_derivative(const SpaceTimeConnection& stc, const TensorJ& t, std::uint32_t upper_mask, bool spatial) {
  const int d = t.dim();
  const int r = t.rank();
  const std::size_t block = t.size();
  const JetSpace& space = t[0].space();
  const TensorJ& G = stc.gammat;
  TensorJ out(d, r + 1, Jet(space, -1));
  for (int a = spatial ? 1 : 0; a < d; ++a) {
    const int v = stc.chart.jet_var(a);
    for (std::size_t f = 0; f < block; ++f) {
      const auto idx = t.unravel(f);
      Jet acc = t[f].d(v);
      for (int s = 0; s < r; ++s) {
        const std::size_t stride = stride_of(t, s);
        const std::size_t base = f - static_cast<std::size_t>(idx[s]) * stride;
        if ((upper_mask >> s) & 1u) {
          if (idx[s] == 0) continue;
          for (int c = 0; c < d; ++c) acc += G(idx[s], a, c) * t[base + static_cast<std::size_t>(c) * stride];
        } else {
          for (int c = 1; c < d; ++c) acc -= G(c, a, idx[s]) * t[base + static_cast<std::size_t>(c) * stride];
        }
      }
      out[static_cast<std::size_t>(a) * block + f] = acc;
    }
  }
  return out;
}

}  // namespace

TensorJ st_spatial_trace(const TensorJ& t, const SpaceTimeCometric& gt) {
  const int d = t.dim();
  TensorJ out(d, t.rank() - 2, Jet());
  const std::size_t block = out.size();
  for (std::size_t f = 0; f < block; ++f) {
    Jet acc = gt.gt_inv(1, 1) * t[(static_cast<std::size_t>(1) * d + 1) * block + f];
    for (int a = 1; a < d; ++a)
      for (int b = 1; b < d; ++b)
        if (a + b > 2) acc += gt.gt_inv(a, b) * t[(static_cast<std::size_t>(a) * d + b) * block + f];
    out[f] = acc;
  }
  return out;
}

TensorJ embed_spatial(const TensorJ& t) {
  const int d = t.dim() + 1;
  TensorJ out(d, t.rank(), exact_zero(t));
  for (std::size_t f = 0; f < t.size(); ++f) {
    auto idx = t.unravel(f);
    for (int r = 0; r < t.rank(); ++r) idx[r] += 1;
    out[out.flat(idx)] = t[f];
  }
  return out;
}

SpaceTimeCometric cometric(const MetricJet& jet) { return {embed_spatial(jet.g_inv)}; }

SpaceTimeConnection build_connection(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                                     const std::optional<CotensorJet>& v) {
  const int n = jet.dim();
  const JetSpace& space = jet.space();
  const CotensorJet vv = v ? *v : zero_tensor(space, kMaxJetOrder, n, 1);
  const Chart st{n, true};
  SpaceTimeConnection out{TensorJ(n + 1, 3, Jet(space, kMaxJetOrder)), st};
  TensorJ& G = out.gammat;

  // (a)
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(k + 1, i + 1, j + 1) = conn.gamma(k, i, j);

  // (c): -R_i^k + nabla_i V^k
  const TensorJ dv_up = raise_index(cov_deriv(conn, vv), jet.g_inv, 1);  // (i, k)
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const Jet c = dv_up(i, k) - curv.ricci_mixed(i, k);
      G(k + 1, i + 1, 0) = c;
      G(k + 1, 0, i + 1) = c;
    }

  // (d): -1/2 grad^k (R + |V|^2) + g^kp dV_p/dt
  Jet speed = vv(0) * vv(0) * jet.g_inv(0, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a + b > 0) speed += jet.g_inv(a, b) * vv(a) * vv(b);
  const int tv = space.time_var();
  for (int k = 0; k < n; ++k) {
    Jet acc(space, kMaxJetOrder);
    for (int a = 0; a < n; ++a) {
      if (!mutation::is(mutation::Kind::DropGamma00Gradient)) acc -= 0.5 * jet.g_inv(k, a) * curv.scalar.d(a);
      if (!mutation::is(mutation::Kind::DropGamma00Speed)) acc -= 0.5 * jet.g_inv(k, a) * speed.d(a);
      if (!mutation::is(mutation::Kind::DropGamma00Drift)) acc += jet.g_inv(k, a) * vv(a).d(tv);
    }
    G(k + 1, 0, 0) = acc;
  }
  return out;
}

TensorJ st_cov_deriv(const SpaceTimeConnection& stc, const TensorJ& t, std::uint32_t upper_mask) {
  return st_derivative(stc, t, upper_mask, false);
}

TensorJ st_spatial_cov_deriv(const SpaceTimeConnection& stc, const TensorJ& t, std::uint32_t upper_mask) {
  return st_derivative(stc, t, upper_mask, true);
}

double compat_check(const SpaceTimeCometric& gt, const SpaceTimeConnection& stc) {
  return max_abs(values(st_cov_deriv(stc, gt.gt_inv, 0b11u)));
}

SpaceTimeCurvature st_curvature(const SpaceTimeConnection& stc) {
  SpaceTimeCurvature c;
  c.riem = riemann_from_connection(stc.gammat, stc.chart);
  if (mutation::is(mutation::Kind::FlipCurvatureSign))
    for (Jet& x : c.riem) x = -x;
  c.ricci = ricci_from_riemann(c.riem);
  return c;
}

TensorJ extend_h(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv, const CotensorJet& h) {
  const int n = jet.dim();
  const DivergencePack dp = divergence(jet, conn, curv, h);
  TensorJ out = embed_spatial(h);
  for (int i = 0; i < n; ++i) {
    out(0, i + 1) = dp.div(i);
    out(i + 1, 0) = dp.div(i);
  }
  out(0, 0) = mutation::is(mutation::Kind::DropRcDotH) ? dp.div_div : dp.div_div + dp.rc_dot_h;
  return out;
}

TensorJ st_laplacian(const SpaceTimeConnection& stc, const SpaceTimeCometric& gt, const TensorJ& t) {
  return st_spatial_trace(st_spatial_cov_deriv(stc, st_spatial_cov_deriv(stc, t)), gt);
}

double time_row_residual(const TensorJ& ht, const SpaceTimeConnection& stc, const SpaceTimeCometric& gt) {
  const TensorJ div = st_spatial_trace(st_spatial_cov_deriv(stc, ht), gt);
  double worst = 0.0;
  for (int i = 0; i < ht.dim(); ++i) worst = std::max(worst, std::abs(ht(i, 0).value() - div(i).value()));
  return worst;
}

TensorJ st_lichnerowicz(const TensorJ& ht, const SpaceTimeConnection& stc, const SpaceTimeCurvature& stcurv,
                        const SpaceTimeCometric& gt) {
  const int d = ht.dim();
  const TensorJ lap = st_laplacian(stc, gt, ht);
  const TensorJ h_mixed = raise_index(ht, gt.gt_inv, 0);  // h~^a_j
  TensorJ out(d, 2, Jet());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Jet acc = lap(i, j);
      for (int p = 1; p < d; ++p)
        for (int q = 0; q < d; ++q) acc += 2.0 * stcurv.riem(p, i, j, q) * h_mixed(p, q);
      for (int a = 1; a < d; ++a) {
        acc -= stcurv.ricci(i, a) * h_mixed(a, j);
        acc -= stcurv.ricci(j, a) * h_mixed(a, i);
      }
      out(i, j) = acc;
    }
  return out;
}

TensorJ build_Wtilde(const CotensorJet& w, const MetricJet& jet, const SpatialConnection& conn) {
  const int n = jet.dim();
  TensorJ out(n + 1, 1, Jet());
  out(0) = trace_first_two(cov_deriv(conn, w), jet.g_inv)[0];
  for (int i = 0; i < n; ++i) out(i + 1) = w(i);
  return out;
}

SpaceTimePoint spacetime_point(const MetricJet& jet, const CotensorJet& v) {
  SpaceTimePoint s;
  s.jet = jet;
  s.conn = christoffel(s.jet);
  s.curv = curvature(s.jet, s.conn);
  s.v = v;
  s.gt = cometric(s.jet);
  s.stc = build_connection(s.jet, s.conn, s.curv, s.v);
  s.stcurv = st_curvature(s.stc);
  return s;
}

SpaceTimePoint spacetime_point(const SolutionProvider& provider, const ChartPoint& p, int order) {
  return spacetime_point(eval_metric_jet(provider, p, order), provider.shift_jet(p, order));
}

}  // namespace riccilab
