#pragma once

// Riemannian tensor calculus on jets. The generic functions take a Chart so
// the same code serves spatial metrics, the degenerate space-time structure
// and the Riemannian approximations on space-time.
//
// Conventions:
//   gamma(k, i, j)   = Gamma^k_ij
//   riem(i, j, k, l) = R_ijk^l = d_i Gamma^l_jk - d_j Gamma^l_ik
//                               + Gamma^p_jk Gamma^l_ip - Gamma^p_ik Gamma^l_jp
//   ricci(j, k)      = R_pjk^p
//   riem_low(i,j,k,l)= R_ijk^m g_ml
// With these the round sphere has R_ijkl = K (g_jk g_il - g_ik g_jl) and
// positive scalar curvature.

#include <cstdint>

#include "riccilab/jets.hpp"

namespace riccilab {

TensorJ christoffel_symbols(const TensorJ& g, const TensorJ& g_inv, const Chart& chart);
TensorJ riemann_from_connection(const TensorJ& gamma, const Chart& chart);
TensorJ ricci_from_riemann(const TensorJ& riem);

/// Covariant derivative; the new derivative index comes first. Bit s of
/// `upper_mask` marks slot s of `t` as contravariant.
TensorJ covariant_derivative(const TensorJ& t, const TensorJ& gamma, const Chart& chart,
                             std::uint32_t upper_mask = 0);

/// cometric^{ab} t_{ab...}: contraction of the first two slots.
TensorJ trace_first_two(const TensorJ& t, const TensorJ& cometric);
/// cometric^{ab} t_{...b...} with b in `slot`, result index a in the same slot.
TensorJ raise_index(const TensorJ& t, const TensorJ& cometric, int slot);
/// metric_{ab} t^{...b...}.
TensorJ lower_index(const TensorJ& t, const TensorJ& metric, int slot);
/// Full contraction a^{ij} b_{ij} over two rank-2 tables.
Jet contract2(const TensorJ& upper, const TensorJ& lower);
/// t_ij + t_ji.
TensorJ symmetrized_sum(const TensorJ& t);

struct SpatialConnection {
  TensorJ gamma;  // Gamma^k_ij
  Chart chart;
};

struct CurvaturePack {
  TensorJ riem;         // R_ijk^l
  TensorJ riem_low;     // R_ijkl
  TensorJ ricci;        // R_ij
  TensorJ ricci_mixed;  // R_i^k = R_ia g^ak, stored (i, k)
  Jet scalar;           // R
  TensorJ dricci;       // nabla_k R_ij, stored (k, i, j)
  TensorJ dscalar;      // nabla_i R
  TensorJ d2scalar;     // nabla_i nabla_j R
  TensorJ lap_ricci;    // Delta R_ij
};

SpatialConnection christoffel(const MetricJet& jet);
CurvaturePack curvature(const MetricJet& jet, const SpatialConnection& conn);

/// Covariant derivative of a fully covariant spatial tensor.
TensorJ cov_deriv(const SpatialConnection& conn, const CotensorJet& t);
/// Rough Laplacian g^ab nabla_a nabla_b of a covariant tensor.
TensorJ laplacian(const MetricJet& jet, const SpatialConnection& conn, const CotensorJet& t);

struct DivergencePack {
  TensorJ div;    // div(h)_i = g^pq nabla_p h_qi
  Jet div_div;    // g^pq nabla_p div(h)_q
  Jet rc_dot_h;   // g^ip g^jq R_ij h_pq
  Jet trace;      // H = g^ij h_ij
};

DivergencePack divergence(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                          const CotensorJet& h);

/// Delta h_ij + 2 R_pijq h^pq - R_i^q h_qj - R_j^q h_iq.
TensorJ lichnerowicz(const MetricJet& jet, const SpatialConnection& conn, const CurvaturePack& curv,
                     const CotensorJet& h);

/// Ricci tensor straight from metric components (used by the integrators).
TensorJ ricci_tensor(const TensorJ& g, const TensorJ& g_inv);

}  // namespace riccilab
