#include "qsl/info_measures.hpp"

#include <cmath>
#include <memory>

#include <gsl/gsl_integration.h>

namespace qsl {

namespace {

/// Matrix elements of `m` in the eigenbasis of rho.
Matrix in_basis(const EigenDecomposition& e, const Matrix& m) { return e.vectors.adjoint() * m * e.vectors; }

double power0(double x, double k) { return x > kEigFloor ? std::pow(x, k) : 0.0; }

}  // namespace

double qfi_from_derivative(const DensityMatrix& rho, const Matrix& d, double eig_floor) {
  if (d.rows() != rho.dim() || d.cols() != rho.dim()) throw DimensionMismatch("qfi: dimension mismatch");
  const auto e = eig_hermitian(rho.op());
  const Matrix dm = in_basis(e, d);
  double f = 0.0;
  for (Index i = 0; i < dm.rows(); ++i)
    for (Index j = 0; j < dm.cols(); ++j) {
      const double s = e.values(i) + e.values(j);
      if (s > eig_floor) f += 2.0 * std::norm(dm(i, j)) / s;
    }
  return f;
}

double qfi(const DensityMatrix& rho, const Generator& g, double t, double eig_floor) {
  if (g.dim() != rho.dim()) throw DimensionMismatch("qfi: generator and state dimensions differ");
  return qfi_from_derivative(rho, g.apply(rho.matrix(), t), eig_floor);
}

HermitianOperator sld(const DensityMatrix& rho, const Generator& g, double t, double eig_floor) {
  if (g.dim() != rho.dim()) throw DimensionMismatch("sld: generator and state dimensions differ");
  const auto e = eig_hermitian(rho.op());
  Matrix l = in_basis(e, g.apply(rho.matrix(), t));
  for (Index i = 0; i < l.rows(); ++i)
    for (Index j = 0; j < l.cols(); ++j) {
      const double s = e.values(i) + e.values(j);
      l(i, j) = s > eig_floor ? 2.0 * l(i, j) / s : Complex(0.0);
    }
  return HermitianOperator::hermitian_part(e.vectors * l * e.vectors.adjoint());
}

double wigner_yanase(const DensityMatrix& rho, const HermitianOperator& v) {
  if (v.dim() != rho.dim()) throw DimensionMismatch("wigner_yanase: dimension mismatch");
  return i_k(rho, v, 0.5);
}

double kubo_mori_variance(const DensityMatrix& rho, const HermitianOperator& a, double eig_floor) {
  if (a.dim() != rho.dim()) throw DimensionMismatch("kubo_mori_variance: dimension mismatch");
  const auto e = eig_hermitian(rho.op());
  if (e.values(0) <= eig_floor) throw RequiresFullRank("kubo_mori_variance: state has an eigenvalue below the floor");
  const double mean = expectation(rho, a);
  const Matrix abar = in_basis(e, a.matrix() - mean * Matrix::Identity(a.dim(), a.dim()));
  double var = 0.0;
  for (Index i = 0; i < abar.rows(); ++i)
    for (Index j = 0; j < abar.cols(); ++j) {
      const double li = e.values(i);
      const double lj = e.values(j);
      double w;
      if (std::abs(li - lj) <= 1e-8 * std::max(li, lj)) {
        w = 0.5 * (li + lj);
      } else {
        w = (li - lj) / (std::log(li) - std::log(lj));
      }
      var += w * std::norm(abar(i, j));
    }
  return var;
}

double i_k(const DensityMatrix& rho, const HermitianOperator& a, double k) {
  if (a.dim() != rho.dim()) throw DimensionMismatch("i_k: dimension mismatch");
  if (!(k >= 0.0 && k <= 1.0)) throw InvalidArgument("i_k: k must lie in [0, 1]");
  const auto e = eig_hermitian(rho.op());
  const Matrix am = in_basis(e, a.matrix());
  double total = 0.0;
  for (Index i = 0; i < am.rows(); ++i)
    for (Index j = i + 1; j < am.cols(); ++j) {
      const double li = e.values(i);
      const double lj = e.values(j);
      total += (power0(li, k) - power0(lj, k)) * (power0(li, 1.0 - k) - power0(lj, 1.0 - k)) * std::norm(am(i, j));
    }
  return total;
}

double ibar_closed_form(const DensityMatrix& rho, const HermitianOperator& a) {
  return variance(rho, a) - kubo_mori_variance(rho, a);
}

double ibar_quadrature(const DensityMatrix& rho, const HermitianOperator& a, int nodes) {
  if (nodes < 1) throw InvalidArgument("ibar_quadrature: need at least one node");
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(static_cast<size_t>(nodes)), &gsl_integration_glfixed_table_free);
  if (!table) throw Error("ibar_quadrature: could not allocate Gauss-Legendre table");

  // The integrand is smooth in k; evaluate it from one eigendecomposition.
  const auto e = eig_hermitian(rho.op());
  const Matrix am = in_basis(e, a.matrix());
  double total = 0.0;
  for (int n = 0; n < nodes; ++n) {
    double k = 0.0;
    double w = 0.0;
    gsl_integration_glfixed_point(0.0, 1.0, static_cast<size_t>(n), &k, &w, table.get());
    double ik = 0.0;
    for (Index i = 0; i < am.rows(); ++i)
      for (Index j = i + 1; j < am.cols(); ++j) {
        const double li = e.values(i);
        const double lj = e.values(j);
        ik += (power0(li, k) - power0(lj, k)) * (power0(li, 1.0 - k) - power0(lj, 1.0 - k)) * std::norm(am(i, j));
      }
    total += w * ik;
  }
  return total;
}

double ibar(const DensityMatrix& rho, const HermitianOperator& a) {
  if (a.dim() != rho.dim()) throw DimensionMismatch("ibar: dimension mismatch");
  const auto e = eig_hermitian(rho.op());
  if (e.values(0) > kEigFloor) return std::max(ibar_closed_form(rho, a), 0.0);
  return ibar_quadrature(rho, a);
}

MetricAdjustedBounds metric_adjusted_bounds_check(const DensityMatrix& rho, const HermitianOperator& h) {
  const double ib = ibar(rho, h);
  const double f = qfi(rho, Generator::hamiltonian(h));
  MetricAdjustedBounds out{4.0 * ib, f, 12.0 * ib, false};
  out.holds = out.lower <= f + 1e-9 && f <= out.upper + 1e-9;
  return out;
}

}  // namespace qsl
