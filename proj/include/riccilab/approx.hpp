#pragma once

// Riemannian metrics g^(N) on space-time approximating the degenerate
// structure: the metric, its block inverse, the closed-form Christoffel table
// and the 1/N convergence study. Index 0 is time throughout.

#include <functional>
#include <string>
#include <vector>

#include "riccilab/errors.hpp"
#include "riccilab/spacetime.hpp"

namespace riccilab {

namespace detail {
inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }
}  // namespace detail

/// Inverse of [[b, X^T], [X, G]] (time first) given G^{-1}, by the Schur
/// complement D = b - X^T G^{-1} X. With G = I this is the familiar
/// [[I + XX^T/D, -X/D], [-X^T/D, 1/D]] up to the ordering of the blocks.
template <class T>
Tensor<T> block_inverse(const Tensor<T>& g_inv, const std::vector<T>& x, const T& b) {
  const int n = g_inv.dim();
  std::vector<T> y;  // G^{-1} X
  for (int i = 0; i < n; ++i) {
    T acc = g_inv(i, 0) * x[0];
    for (int j = 1; j < n; ++j) acc += g_inv(i, j) * x[j];
    y.push_back(acc);
  }
  T d = b;
  for (int i = 0; i < n; ++i) d -= x[i] * y[i];
  if (!(detail::value_of(d) > 0.0))
    throw DenominatorNonPositive("b - |X|^2 = " + std::to_string(detail::value_of(d)));
  T inv_d = 1.0 / d;
  Tensor<T> out(n + 1, 2, inv_d);
  for (int i = 0; i < n; ++i) {
    T off = -(y[i] * inv_d);
    out(0, i + 1) = off;
    out(i + 1, 0) = off;
    for (int j = 0; j < n; ++j) out(i + 1, j + 1) = g_inv(i, j) + y[i] * y[j] * inv_d;
  }
  return out;
}

enum class FChoice { Zero, RandomBump, LogDetRatio };
std::string fchoice_name(FChoice f);

/// The scalar f as a jet at the point of `jet`. LogDetRatio uses
/// 1/2 log det(g + s k) / det g with a random symmetric k and s = 0.1.
Jet make_f(FChoice choice, const MetricJet& jet, std::uint64_t seed);

struct ApproxMetric {
  double N = 0.0;
  MetricJet base;
  CotensorJet V;
  Jet f;
  Jet D;          // R + 2(df/dt - <grad f, V>) - |grad f|^2 + N
  TensorJ ghat;
  TensorJ ghat_inv;
};

/// ghat_ij = g_ij, ghat_i0 = V_i + d_i f, ghat_00 = R + |V|^2 + 2 df/dt + N.
/// Throws NotPositiveDefinite when D < `margin`.
ApproxMetric build_ghat(const MetricJet& jet, const CurvaturePack& curv, const CotensorJet& v, const Jet& f, double N,
                        double margin = 1.0);

/// The three displayed components of the inverse, assembled directly.
TensorJ ghat_inverse_display(const ApproxMetric& am);

/// Standard formula 1/2 ghat^kl (d_i ghat_jl + d_j ghat_il - d_l ghat_ij).
TensorJ ghat_christoffel_generic(const ApproxMetric& am);

enum class ClosedTable { Corrected, AsPrinted };

/// The closed-form table. `AsPrinted` reproduces the printed formulas, whose
/// Gamma^0_00 lacks the d^2 f/dt^2 term; `Corrected` restores it.
TensorJ ghat_christoffel_closed(const ApproxMetric& am, const SpatialConnection& conn, const CurvaturePack& curv,
                                ClosedTable form = ClosedTable::Corrected);

struct SlopeFit {
  std::string quantity;
  std::vector<double> residuals;  // one per N
  double slope = 0.0;
  double intercept = 0.0;
  bool exact = false;             // every residual is zero to roundoff
};

struct ConvergenceReport {
  std::vector<double> Ns;
  std::vector<SlopeFit> fits;  // ginv, gamma, riem
  std::string csv() const;
};

inline const std::vector<double> kDefaultNGrid{1e2, 1e3, 1e4, 1e5, 1e6};

/// Max over the sample points of |ghat^-1 - g~|, |Gamma^ - Gamma~| and
/// |R^ - R~| for each N, with least-squares slopes of log residual vs log N.
ConvergenceReport convergence_study(const std::vector<SpaceTimePoint>& points, const std::vector<Jet>& fs,
                                    const std::vector<double>& Ns = kDefaultNGrid);

/// Least-squares line through (log x, log y).
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace riccilab
