#pragma once

// Degenerate space-time structure on M x [0, T): cometric, connection,
// curvature, the extension of h, and the space-time Lichnerowicz operator.
// Index 0 is time; spatial indices are 1..n in every (n+1)-dimensional table.

#include <optional>

#include "riccilab/riemann.hpp"

namespace riccilab {

struct SpaceTimeCometric {
  TensorJ gt_inv;  // g^ij on the spatial block, zero on row and column 0
};

struct SpaceTimeConnection {
  TensorJ gammat;  // Gamma~^k_ij, (n+1)-dimensional
  Chart chart;     // space-time chart
};

struct SpaceTimeCurvature {
  TensorJ riem;   // R~_ijk^l
  TensorJ ricci;  // R~_jk = R~_pjk^p
};

/// Spatial tensor placed into the spatial block of an (n+1)-dimensional
/// table; every entry touching index 0 is zero.
TensorJ embed_spatial(const TensorJ& t);

SpaceTimeCometric cometric(const MetricJet& jet);

/// Connection table with drift 1-form V (zero when `v` is empty).
SpaceTimeConnection build_connection(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                                     const std::optional<CotensorJet>& v = std::nullopt);

/// max |nabla~_i g~^jk| over all space-time indices.
double compat_check(const SpaceTimeCometric& gt, const SpaceTimeConnection& stc);

SpaceTimeCurvature st_curvature(const SpaceTimeConnection& stc);

/// h~ with blocks h, div(h), div(div(h)) + Rc.h.
TensorJ extend_h(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv, const CotensorJet& h);

/// Covariant derivative on space-time; derivative index first.
TensorJ st_cov_deriv(const SpaceTimeConnection& stc, const TensorJ& t, std::uint32_t upper_mask = 0);
/// Same with the derivative index restricted to space; the time slab is left
/// unevaluated (degree -1). Enough for anything contracted with g~.
TensorJ st_spatial_cov_deriv(const SpaceTimeConnection& stc, const TensorJ& t, std::uint32_t upper_mask = 0);
/// g~^ab t_ab... over the first two slots, summing spatial indices only.
TensorJ st_spatial_trace(const TensorJ& t, const SpaceTimeCometric& gt);
/// g~^ab nabla~_a nabla~_b t.
TensorJ st_laplacian(const SpaceTimeConnection& stc, const SpaceTimeCometric& gt, const TensorJ& t);

/// max_i |h~_i0 - g~^jk nabla~_j h~_ki|.
double time_row_residual(const TensorJ& ht, const SpaceTimeConnection& stc, const SpaceTimeCometric& gt);

/// Delta~ h~_ij + 2 R~_pij^q h~^p_q - R~_iq h~^q_j - R~_jq h~^q_i, where raised
/// indices always use the degenerate cometric.
TensorJ st_lichnerowicz(const TensorJ& ht, const SpaceTimeConnection& stc, const SpaceTimeCurvature& stcurv,
                        const SpaceTimeCometric& gt);

/// W~_i = W_i, W~_0 = g^pq nabla_p W_q.
TensorJ build_Wtilde(const CotensorJet& w, const MetricJet& jet, const SpatialConnection& conn);

/// Everything above, assembled at one point of a provider.
struct SpaceTimePoint {
  MetricJet jet;
  SpatialConnection conn;
  CurvaturePack curv;
  CotensorJet v;
  SpaceTimeCometric gt;
  SpaceTimeConnection stc;
  SpaceTimeCurvature stcurv;
};

SpaceTimePoint spacetime_point(const MetricJet& jet, const CotensorJet& v);
SpaceTimePoint spacetime_point(const SolutionProvider& provider, const ChartPoint& p, int order);

}  // namespace riccilab
