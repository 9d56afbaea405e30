#include "riccilab/approx.hpp"

#include <cmath>
#include <sstream>

namespace riccilab {

namespace {

struct Pieces {
  int n = 0;
  int tv = 0;
  std::vector<Jet> vup, fup, y, df, dft;
  Jet ft, ftt, vsq;
};

Pieces pieces(const ApproxMetric& am) {
  Pieces p;
  const MetricJet& jet = am.base;
  p.n = jet.dim();
  p.tv = jet.space().time_var();
  for (int i = 0; i < p.n; ++i) p.df.push_back(am.f.d(i));
  p.ft = am.f.d(p.tv);
  p.ftt = p.ft.d(p.tv);
  for (int i = 0; i < p.n; ++i) p.dft.push_back(p.ft.d(i));
  for (int k = 0; k < p.n; ++k) {
    Jet v = jet.g_inv(k, 0) * am.V(0);
    Jet f = jet.g_inv(k, 0) * p.df[0];
    for (int l = 1; l < p.n; ++l) {
      v += jet.g_inv(k, l) * am.V(l);
      f += jet.g_inv(k, l) * p.df[l];
    }
    p.vup.push_back(v);
    p.fup.push_back(f);
    p.y.push_back(v + f);
  }
  p.vsq = p.vup[0] * am.V(0);
  for (int l = 1; l < p.n; ++l) p.vsq += p.vup[l] * am.V(l);
  return p;
}

}  // namespace

std::string fchoice_name(FChoice f) {
  switch (f) {
    case FChoice::Zero: return "zero";
    case FChoice::RandomBump: return "random_bump";
    case FChoice::LogDetRatio: return "log_det_ratio";
  }
  return "?";
}

Jet make_f(FChoice choice, const MetricJet& jet, std::uint64_t seed) {
  const JetSpace& space = jet.space();
  const int n = jet.dim();
  switch (choice) {
    case FChoice::Zero:
      return Jet::constant(space, kMaxJetOrder, 0.0);
    case FChoice::RandomBump:
      return RandomField(n, 0, false, seed, 0.4, 3).jet(space, jet.order, jet.point)[0];
    case FChoice::LogDetRatio: {
      const TensorJ k = RandomField(n, 2, true, seed, 0.3, 2).jet(space, jet.order, jet.point);
      TensorJ gs = jet.g;
      for (std::size_t c = 0; c < gs.size(); ++c) gs[c] += 0.1 * k[c];
      return 0.5 * (log(determinant(gs)) - log(determinant(jet.g)));
    }
  }
  throw ConfigInvalid("unknown f choice");
}

ApproxMetric build_ghat(const MetricJet& jet, const CurvaturePack& curv, const CotensorJet& v, const Jet& f, double N,
                        double margin) {
  ApproxMetric am;
  am.N = N;
  am.base = jet;
  am.V = v;
  am.f = f;
  const Pieces p = pieces(am);
  const int n = p.n;

  Jet fv = p.fup[0] * v(0), fsq = p.fup[0] * p.df[0];
  for (int l = 1; l < n; ++l) {
    fv += p.fup[l] * v(l);
    fsq += p.fup[l] * p.df[l];
  }
  am.D = curv.scalar + 2.0 * (p.ft - fv) - fsq + N;
  if (am.D.value() < margin)
    throw NotPositiveDefinite("N = " + std::to_string(N) + " leaves D = " + std::to_string(am.D.value()));

  std::vector<Jet> x;
  for (int i = 0; i < n; ++i) x.push_back(v(i) + p.df[i]);
  const Jet b = curv.scalar + p.vsq + 2.0 * p.ft + N;
  am.ghat = TensorJ(n + 1, 2, b);
  for (int i = 0; i < n; ++i) {
    am.ghat(0, i + 1) = x[i];
    am.ghat(i + 1, 0) = x[i];
    for (int j = 0; j < n; ++j) am.ghat(i + 1, j + 1) = jet.g(i, j);
  }
  am.ghat_inv = block_inverse(jet.g_inv, x, b);
  return am;
}

TensorJ ghat_inverse_display(const ApproxMetric& am) {
  const Pieces p = pieces(am);
  const Jet inv_d = 1.0 / am.D;
  TensorJ out(p.n + 1, 2, inv_d);
  for (int i = 0; i < p.n; ++i) {
    out(0, i + 1) = -(p.y[i] * inv_d);
    out(i + 1, 0) = out(0, i + 1);
    for (int j = 0; j < p.n; ++j) out(i + 1, j + 1) = am.base.g_inv(i, j) + p.y[i] * p.y[j] * inv_d;
  }
  return out;
}

TensorJ ghat_christoffel_generic(const ApproxMetric& am) {
  return christoffel_symbols(am.ghat, am.ghat_inv, Chart{am.base.dim(), true});
}

TensorJ ghat_christoffel_closed(const ApproxMetric& am, const SpatialConnection& conn, const CurvaturePack& curv,
                                ClosedTable form) {
  const Pieces p = pieces(am);
  const int n = p.n;
  const TensorJ& gi = am.base.g_inv;
  const TensorJ& V = am.V;
  const Jet inv_d = 1.0 / am.D;
  const Jet& R = curv.scalar;
  const TensorJ dv = cov_deriv(conn, V);  // nabla_i V_l
  const TensorJ dv_up = raise_index(dv, gi, 1);

  TensorJ out(n + 1, 3, Jet(am.f.space(), kMaxJetOrder));

  // spatial-spatial: A_ij = R_ij + nabla_i nabla_j f
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet a = curv.ricci(i, j) + p.df[i].d(j);
      for (int k = 0; k < n; ++k) a -= conn.gamma(k, i, j) * p.df[k];
      out(0, i + 1, j + 1) = a * inv_d;
      for (int k = 0; k < n; ++k) out(k + 1, i + 1, j + 1) = conn.gamma(k, i, j) - p.y[k] * a * inv_d;
    }

  // mixed: B_i = 1/2 d_i R + V^l R_il + grad^l f (R_il - nabla_i V_l) + d_i df/dt
  for (int i = 0; i < n; ++i) {
    Jet b = 0.5 * R.d(i) + p.dft[i];
    for (int l = 0; l < n; ++l) b += p.vup[l] * curv.ricci(i, l) + p.fup[l] * (curv.ricci(i, l) - dv(i, l));
    out(0, i + 1, 0) = b * inv_d;
    out(0, 0, i + 1) = out(0, i + 1, 0);
    for (int k = 0; k < n; ++k) {
      out(k + 1, i + 1, 0) = -curv.ricci_mixed(i, k) + dv_up(i, k) - p.y[k] * b * inv_d;
      out(k + 1, 0, i + 1) = out(k + 1, i + 1, 0);
    }
  }

  // time-time
  Jet e = 0.5 * R.d(p.tv);
  for (int l = 0; l < n; ++l) {
    e += 0.5 * p.vup[l] * R.d(l);
    e -= p.fup[l] * (V(l).d(p.tv) - 0.5 * (R.d(l) + p.vsq.d(l)));
    for (int m = 0; m < n; ++m) e += curv.ricci(l, m) * p.vup[l] * p.vup[m];
  }
  e += p.ftt;
  const Jet e_time = form == ClosedTable::Corrected ? e : e - p.ftt;
  out(0, 0, 0) = e_time * inv_d;
  for (int k = 0; k < n; ++k) {
    Jet acc = -0.5 * gi(k, 0) * (R.d(0) + p.vsq.d(0)) + gi(k, 0) * V(0).d(p.tv);
    for (int l = 1; l < n; ++l) acc += -0.5 * gi(k, l) * (R.d(l) + p.vsq.d(l)) + gi(k, l) * V(l).d(p.tv);
    out(k + 1, 0, 0) = acc - p.y[k] * e * inv_d;
  }
  return out;
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log10(x[i]), ly = std::log10(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return {slope, (sy - slope * sx) / m};
}

ConvergenceReport convergence_study(const std::vector<SpaceTimePoint>& points, const std::vector<Jet>& fs,
                                    const std::vector<double>& Ns) {
  ConvergenceReport rep;
  rep.Ns = Ns;
  rep.fits = {{"ginv", {}, 0, 0, false}, {"gamma", {}, 0, 0, false}, {"riem", {}, 0, 0, false}};
  for (double N : Ns) {
    double r_ginv = 0.0, r_gamma = 0.0, r_riem = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const SpaceTimePoint& s = points[k];
      const ApproxMetric am = build_ghat(s.jet, s.curv, s.v, fs[k], N);
      const TensorJ gamma = ghat_christoffel_generic(am);
      const TensorJ riem = riemann_from_connection(gamma, s.stc.chart);
      r_ginv = std::max(r_ginv, max_abs(values(difference(am.ghat_inv, s.gt.gt_inv))));
      r_gamma = std::max(r_gamma, max_abs(values(difference(gamma, s.stc.gammat))));
      r_riem = std::max(r_riem, max_abs(values(difference(riem, s.stcurv.riem))));
    }
    rep.fits[0].residuals.push_back(r_ginv);
    rep.fits[1].residuals.push_back(r_gamma);
    rep.fits[2].residuals.push_back(r_riem);
  }
  for (SlopeFit& f : rep.fits) {
    f.exact = *std::max_element(f.residuals.begin(), f.residuals.end()) < 1e-13;
    if (f.exact) continue;
    std::tie(f.slope, f.intercept) = loglog_fit(rep.Ns, f.residuals);
  }
  return rep;
}

std::string ConvergenceReport::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "N,residual_ginv,residual_gamma,residual_riem\n";
  for (std::size_t i = 0; i < Ns.size(); ++i)
    os << Ns[i] << ',' << fits[0].residuals[i] << ',' << fits[1].residuals[i] << ',' << fits[2].residuals[i] << '\n';
  return os.str();
}

}  // namespace riccilab
