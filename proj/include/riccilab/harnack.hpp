#pragma once

// Harnack quadratics at a single space-time point: Hamilton's trace
// expression, the linear trace quadratic Z, the matrix quadratic Q and the
// minimization of Z over V.

#include <string>
#include <utility>
#include <vector>

#include "riccilab/spacetime.hpp"

namespace riccilab {

/// Test data. V and W are 1-forms, U is a 2-form (antisymmetric, covariant).
/// `vt0` is the time component of the space-time vector V + vt0 d/dt.
struct HarnackFrame {
  std::vector<double> V;
  std::vector<double> W;
  TensorD U;
  double vt0 = 1.0;
};

/// Random frame with entries of size about `scale`.
HarnackFrame random_frame(int n, CounterRng& rng, double scale = 1.0);

struct QuadraticValue {
  double value = 0.0;                                // sum of the labeled parts
  std::vector<std::pair<std::string, double>> parts;
  double contraction = 0.0;                          // sum of h~_ij V~^i V~^j (+ H/2t)
};

/// Pointwise values of everything the linear quadratic needs.
struct HarnackPoint {
  double t = 0.0;
  TensorD g;
  TensorD g_inv;
  TensorD h;
  TensorD div;      // div(h)_i
  double div_div = 0.0;
  double rc_dot_h = 0.0;
  double trace = 0.0;  // H
  TensorD ht;       // h~ including the time row
};

HarnackPoint harnack_point(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                           const CotensorJet& h);

/// dR/dt for an unmodified Ricci flow: Delta R + 2 |Rc|^2.
double dt_scalar_under_flow(const MetricJet& jet, const CurvaturePack& curv);

/// dR/dt + R/t + 2 <grad R, V> + 2 Rc(V, V), V raised with g.
double trace_quadratic(const MetricJet& jet, const CurvaturePack& curv, double dt_scalar, const HarnackFrame& frame,
                       double t);

/// Z = vt0^2 (div div h + Rc.h) + 2 vt0 div(h).V + h(V, V) [+ H/2t], evaluated
/// both from its parts and as the space-time contraction.
QuadraticValue linear_trace_Z(const HarnackPoint& hp, const HarnackFrame& frame, bool include_time_term);

/// M_pq = Delta R_pq - 1/2 nabla_p nabla_q R + 2 R_pijq R^ij - R_pr R^r_q.
TensorD harnack_matrix(const MetricJet& jet, const CurvaturePack& curv);

struct QPair {
  double explicit_form = 0.0;
  double contraction = 0.0;
};

/// Hamilton's matrix quadratic from the explicit formula and from the
/// space-time curvature contracted with T (T_i^j = U_i^j, T_i^0 = W_i).
QPair matrix_Q(const MetricJet& jet, const CurvaturePack& curv, const SpaceTimeCurvature& stcurv,
               const SpaceTimeCometric& gt, const HarnackFrame& frame);

struct OptimalV {
  std::vector<double> vector;  // V*^i
  std::vector<double> form;    // g_ij V*^j
  double z_min = 0.0;
};

/// Minimizer of Z over V for positive definite h.
OptimalV optimal_V(const HarnackPoint& hp, double min_eigenvalue = 1e-10);

/// Eigenvalues of a small symmetric matrix (Jacobi rotations), ascending.
std::vector<double> symmetric_eigenvalues(const TensorD& m);

}  // namespace riccilab
