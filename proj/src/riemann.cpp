#include "riccilab/riemann.hpp"

#include "riccilab/errors.hpp"

namespace riccilab {

namespace {

std::size_t stride_of(const TensorJ& t, int slot) {
  std::size_t s = 1;
  for (int r = slot + 1; r < t.rank(); ++r) s *= static_cast<std::size_t>(t.dim());
  return s;
}

const JetSpace& space_of(const TensorJ& t) { return t[0].space(); }

}  // namespace

TensorJ christoffel_symbols(const TensorJ& g, const TensorJ& g_inv, const Chart& chart) {
  const int d = g.dim();
  const TensorJ dg = partial(g, chart);  // (a, i, j)
  TensorJ lower(d, 3, Jet());            // Gamma_ijl = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) lower(i, j, l) = 0.5 * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
  TensorJ gamma(d, 3, Jet());
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        Jet acc = g_inv(k, 0) * lower(i, j, 0);
        for (int l = 1; l < d; ++l) acc += g_inv(k, l) * lower(i, j, l);
        gamma(k, i, j) = acc;
        gamma(k, j, i) = acc;
      }
  return gamma;
}

TensorJ riemann_from_connection(const TensorJ& gamma, const Chart& chart) {
  const int d = gamma.dim();
  const TensorJ dgam = partial(gamma, chart);  // (a, l, j, k) = d_a Gamma^l_jk
  TensorJ riem(d, 4, Jet());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          if (j < i) {
            riem(i, j, k, l) = -riem(j, i, k, l);
            continue;
          }
          if (i == j) {
            riem(i, j, k, l) = zero_jet(space_of(gamma), std::min(dgam(i, l, j, k).degree(), gamma[0].degree()));
            continue;
          }
          Jet acc = dgam(i, l, j, k) - dgam(j, l, i, k);
          for (int p = 0; p < d; ++p) {
            acc += gamma(p, j, k) * gamma(l, i, p);
            acc -= gamma(p, i, k) * gamma(l, j, p);
          }
          riem(i, j, k, l) = acc;
        }
  return riem;
}

TensorJ ricci_from_riemann(const TensorJ& riem) {
  const int d = riem.dim();
  TensorJ ric(d, 2, Jet());
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      Jet acc = riem(0, j, k, 0);
      for (int p = 1; p < d; ++p) acc += riem(p, j, k, p);
      ric(j, k) = acc;
    }
  return ric;
}

TensorJ covariant_derivative(const TensorJ& t, const TensorJ& gamma, const Chart& chart, std::uint32_t upper_mask) {
  const int d = t.dim();
  const int r = t.rank();
  TensorJ out = partial(t, chart);
  const std::size_t block = t.size();
  for (std::size_t f = 0; f < block; ++f) {
    const auto idx = t.unravel(f);
    for (int a = 0; a < d; ++a) {
      Jet& acc = out[static_cast<std::size_t>(a) * block + f];
      for (int s = 0; s < r; ++s) {
        const std::size_t stride = stride_of(t, s);
        const std::size_t base = f - static_cast<std::size_t>(idx[s]) * stride;
        const bool up = (upper_mask >> s) & 1u;
        for (int c = 0; c < d; ++c) {
          const Jet& tc = t[base + static_cast<std::size_t>(c) * stride];
          if (up)
            acc += gamma(idx[s], a, c) * tc;
          else
            acc -= gamma(c, a, idx[s]) * tc;
        }
      }
    }
  }
  return out;
}

TensorJ trace_first_two(const TensorJ& t, const TensorJ& cometric) {
  const int d = t.dim();
  TensorJ out(d, t.rank() - 2, Jet());
  const std::size_t block = out.size();
  for (std::size_t f = 0; f < block; ++f) {
    Jet acc;
    bool first = true;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const Jet term = cometric(a, b) * t[(static_cast<std::size_t>(a) * d + b) * block + f];
        if (first) {
          acc = term;
          first = false;
        } else {
          acc += term;
        }
      }
    out[f] = acc;
  }
  return out;
}

TensorJ raise_index(const TensorJ& t, const TensorJ& cometric, int slot) {
  const int d = t.dim();
  TensorJ out(d, t.rank(), Jet());
  const std::size_t stride = stride_of(t, slot);
  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = t.unravel(f);
    const std::size_t base = f - static_cast<std::size_t>(idx[slot]) * stride;
    Jet acc = cometric(idx[slot], 0) * t[base];
    for (int b = 1; b < d; ++b) acc += cometric(idx[slot], b) * t[base + static_cast<std::size_t>(b) * stride];
    out[f] = acc;
  }
  return out;
}

TensorJ lower_index(const TensorJ& t, const TensorJ& metric, int slot) { return raise_index(t, metric, slot); }

Jet contract2(const TensorJ& upper, const TensorJ& lower) {
  Jet acc = upper[0] * lower[0];
  for (std::size_t i = 1; i < upper.size(); ++i) acc += upper[i] * lower[i];
  return acc;
}

TensorJ symmetrized_sum(const TensorJ& t) {
  const int d = t.dim();
  TensorJ out(d, 2, Jet());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = t(i, j) + t(j, i);
  return out;
}

SpatialConnection christoffel(const MetricJet& jet) {
  const Chart chart = jet.chart();
  return {christoffel_symbols(jet.g, jet.g_inv, chart), chart};
}

CurvaturePack curvature(const MetricJet& jet, const SpatialConnection& conn) {
  CurvaturePack c;
  c.riem = riemann_from_connection(conn.gamma, conn.chart);
  c.riem_low = lower_index(c.riem, jet.g, 3);
  c.ricci = ricci_from_riemann(c.riem);
  c.ricci_mixed = raise_index(c.ricci, jet.g_inv, 1);
  c.scalar = contract2(jet.g_inv, c.ricci);
  const int n = jet.dim();
  c.dscalar = TensorJ(n, 1, Jet());
  for (int i = 0; i < n; ++i) c.dscalar(i) = c.scalar.d(conn.chart.jet_var(i));
  c.dricci = covariant_derivative(c.ricci, conn.gamma, conn.chart);
  c.d2scalar = covariant_derivative(c.dscalar, conn.gamma, conn.chart);
  c.lap_ricci = trace_first_two(covariant_derivative(c.dricci, conn.gamma, conn.chart), jet.g_inv);
  return c;
}

TensorJ cov_deriv(const SpatialConnection& conn, const CotensorJet& t) {
  return covariant_derivative(t, conn.gamma, conn.chart);
}

TensorJ laplacian(const MetricJet& jet, const SpatialConnection& conn, const CotensorJet& t) {
  const TensorJ dt = cov_deriv(conn, t);
  return trace_first_two(cov_deriv(conn, dt), jet.g_inv);
}

DivergencePack divergence(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                          const CotensorJet& h) {
  DivergencePack out;
  const TensorJ dh = cov_deriv(conn, h);  // (p, q, i)
  out.div = trace_first_two(dh, jet.g_inv);
  out.div_div = trace_first_two(cov_deriv(conn, out.div), jet.g_inv)[0];
  const TensorJ h_up = raise_index(raise_index(h, jet.g_inv, 0), jet.g_inv, 1);
  out.rc_dot_h = contract2(h_up, curv.ricci);
  out.trace = contract2(jet.g_inv, h);
  return out;
}

TensorJ lichnerowicz(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                     const CotensorJet& h) {
  const int n = jet.dim();
  const TensorJ lap = laplacian(jet, conn, h);
  const TensorJ h_up = raise_index(raise_index(h, jet.g_inv, 0), jet.g_inv, 1);
  const TensorJ h_mixed = raise_index(h, jet.g_inv, 0);  // h^a_j
  TensorJ out(n, 2, Jet());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet acc = lap(i, j);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) acc += 2.0 * curv.riem_low(p, i, j, q) * h_up(p, q);
      for (int a = 0; a < n; ++a) {
        acc -= curv.ricci(i, a) * h_mixed(a, j);
        acc -= curv.ricci(j, a) * h_mixed(a, i);
      }
      out(i, j) = acc;
    }
  return out;
}

TensorJ ricci_tensor(const TensorJ& g, const TensorJ& g_inv) {
  const Chart chart{g.dim(), false};
  const TensorJ gamma = christoffel_symbols(g, g_inv, chart);
  return ricci_from_riemann(riemann_from_connection(gamma, chart));
}

}  // namespace riccilab
