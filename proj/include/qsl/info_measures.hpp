#pragma once

// Quantum Fisher information and related skew informations.

#include "qsl/gksl.hpp"

namespace qsl {

inline constexpr double kEigFloor = 1e-12;

/// 2 sum_{lambda_i + lambda_j > floor} |<i|d|j>|^2 / (lambda_i + lambda_j)
/// for a tangent vector d (Hermitian, traceless).
double qfi_from_derivative(const DensityMatrix& rho, const Matrix& d, double eig_floor = kEigFloor);
/// QFI of rho along G(rho), with G evaluated at time t.
double qfi(const DensityMatrix& rho, const Generator& g, double t = 0.0, double eig_floor = kEigFloor);

/// Symmetric logarithmic derivative: 1/2 {L, rho} = G(rho) on the support.
HermitianOperator sld(const DensityMatrix& rho, const Generator& g, double t = 0.0, double eig_floor = kEigFloor);

/// -1/2 tr([sqrt(rho), V]^2)
double wigner_yanase(const DensityMatrix& rho, const HermitianOperator& v);

/// tr[Abar J_rho(Abar)] with log-mean weights; requires a full-rank state.
double kubo_mori_variance(const DensityMatrix& rho, const HermitianOperator& a, double eig_floor = kEigFloor);

/// 1/2 tr([rho^k, A][A, rho^{1-k}]) for k in [0, 1].
double i_k(const DensityMatrix& rho, const HermitianOperator& a, double k);

/// Integral of i_k over k in [0, 1]. Full-rank states use Var - Var^K;
/// otherwise Gauss-Legendre quadrature.
double ibar(const DensityMatrix& rho, const HermitianOperator& a);
double ibar_closed_form(const DensityMatrix& rho, const HermitianOperator& a);
double ibar_quadrature(const DensityMatrix& rho, const HermitianOperator& a, int nodes = 32);

struct MetricAdjustedBounds {
  double lower;  ///< 4 Ibar
  double qfi;    ///< QFI under -i[H, .]
  double upper;  ///< 12 Ibar
  bool holds;    ///< within 1e-9
};

MetricAdjustedBounds metric_adjusted_bounds_check(const DensityMatrix& rho, const HermitianOperator& h);

}  // namespace qsl
