#pragma once

// Dense complex linear algebra for small systems (d <= 64).
//
// Operators are stored as Eigen::MatrixXcd. Superoperators act on
// column-stacked operators: vec(A X B) = (B^T kron A) vec(X).

#include <complex>
#include <functional>

#include <Eigen/Dense>

#include "qsl/errors.hpp"

namespace qsl {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Hermiticity tolerance, relative to 1 + max|M_ij|.
inline constexpr double kHermitianTol = 1e-12;
/// Eigenvalues in [kPsdFloor, 0) are treated as round-off and clamped to 0.
inline constexpr double kPsdFloor = -1e-10;

void require_square(const Matrix& m, const char* what);
void require_finite(const Matrix& m, const char* what);
void require_same_dim(const Matrix& a, const Matrix& b, const char* what);

/// max_ij |M_ij - conj(M_ji)|.
double hermiticity_defect(const Matrix& m);

/// A square matrix that is Hermitian within kHermitianTol. The stored matrix
/// is the exact Hermitian part (M + M^dagger)/2 of the input.
class HermitianOperator {
 public:
  explicit HermitianOperator(const Matrix& m);

  static HermitianOperator zero(Index dim);
  static HermitianOperator identity(Index dim);
  /// Takes (M + M^dagger)/2 without checking how far M was from Hermitian.
  static HermitianOperator hermitian_part(const Matrix& m);

  const Matrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }

  HermitianOperator operator+(const HermitianOperator& o) const;
  HermitianOperator operator-(const HermitianOperator& o) const;
  HermitianOperator operator-() const;
  friend HermitianOperator operator*(double s, const HermitianOperator& h);

 private:
  struct Trusted {};
  HermitianOperator(Matrix m, Trusted) : m_(std::move(m)) {}

  Matrix m_;
};

struct EigenDecomposition {
  RealVector values;  ///< ascending
  Matrix vectors;     ///< orthonormal columns, first significant entry real positive
};

/// Spectral decomposition with deterministic ordering: ascending eigenvalue,
/// ties broken by lexicographic order of the phase-fixed eigenvectors.
EigenDecomposition eig_hermitian(const HermitianOperator& m);

/// Sum_i f(lambda_i) psi_i psi_i^dagger for an arbitrary real function.
HermitianOperator matrix_function(const HermitianOperator& m, const std::function<double(double)>& f);

/// As above, for functions only defined on [0, inf). Eigenvalues in
/// [domain_floor, 0) are clamped to 0; anything lower raises
/// NotPositiveSemidefinite.
HermitianOperator matrix_function_psd(const HermitianOperator& m, const std::function<double(double)>& f,
                                      double domain_floor = kPsdFloor);

HermitianOperator matrix_sqrt(const HermitianOperator& m, double domain_floor = kPsdFloor);
/// M^k on the support of M; 0^k = 0 for every k (including k = 0).
HermitianOperator matrix_power(const HermitianOperator& m, double k, double domain_floor = kPsdFloor);

/// Largest singular value.
double operator_norm(const Matrix& m);
/// Sum of singular values.
double trace_norm(const Matrix& m);

Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix dagger(const Matrix& m);
Complex trace(const Matrix& m);
/// Real part of tr(A B), computed without forming the product.
double trace_product_real(const Matrix& a, const Matrix& b);

/// Column-stacking vectorisation and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index dim);

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix identity(Index dim);
Vector basis_ket(Index dim, Index i);
/// |psi><psi|
Matrix ket_bra(const Vector& psi);

}  // namespace qsl
