#include "qsl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qsl {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionMismatch(os.str());
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
}

void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": dimension mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw DimensionMismatch(os.str());
  }
}

double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

HermitianOperator::HermitianOperator(const Matrix& m) {
  require_square(m, "HermitianOperator");
  require_finite(m, "HermitianOperator");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  const double defect = hermiticity_defect(m);
  if (defect > kHermitianTol * scale) {
    std::ostringstream os;
    os << "matrix is not Hermitian: max |M_ij - conj(M_ji)| = " << defect;
    throw InvalidHermitian(os.str());
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianOperator HermitianOperator::zero(Index dim) { return {Matrix::Zero(dim, dim), Trusted{}}; }

HermitianOperator HermitianOperator::identity(Index dim) { return {Matrix::Identity(dim, dim), Trusted{}}; }

HermitianOperator HermitianOperator::hermitian_part(const Matrix& m) {
  require_square(m, "HermitianOperator::hermitian_part");
  require_finite(m, "HermitianOperator::hermitian_part");
  return {0.5 * (m + m.adjoint()), Trusted{}};
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const {
  require_same_dim(m_, o.m_, "HermitianOperator::operator+");
  return {m_ + o.m_, Trusted{}};
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const {
  require_same_dim(m_, o.m_, "HermitianOperator::operator-");
  return {m_ - o.m_, Trusted{}};
}

HermitianOperator HermitianOperator::operator-() const { return {-m_, Trusted{}}; }

HermitianOperator operator*(double s, const HermitianOperator& h) { return {s * h.m_, HermitianOperator::Trusted{}}; }

namespace {

void fix_phase(Eigen::Ref<Vector> v) {
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > 1e-12) {
      v *= std::conj(v(i)) / a;
      v(i) = a;
      return;
    }
  }
}

bool lexicographic_less(const Vector& a, const Vector& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
    if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
  }
  return false;
}

}  // namespace

EigenDecomposition eig_hermitian(const HermitianOperator& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) throw Error("eig_hermitian: eigensolver did not converge");

  const Index d = m.dim();
  Matrix vectors = solver.eigenvectors();
  RealVector values = solver.eigenvalues();
  for (Index j = 0; j < d; ++j) fix_phase(vectors.col(j));

  // Eigen returns ascending eigenvalues; only tied runs need reordering.
  const double tie_tol = 1e-12 * (1.0 + values.cwiseAbs().maxCoeff());
  std::vector<Index> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  Index start = 0;
  while (start < d) {
    Index end = start + 1;
    while (end < d && values(end) - values(end - 1) <= tie_tol) ++end;
    if (end - start > 1) {
      std::stable_sort(order.begin() + start, order.begin() + end, [&](Index a, Index b) {
        return lexicographic_less(vectors.col(a), vectors.col(b));
      });
    }
    start = end;
  }

  EigenDecomposition out{RealVector(d), Matrix(d, d)};
  for (Index j = 0; j < d; ++j) {
    out.values(j) = values(order[static_cast<size_t>(j)]);
    out.vectors.col(j) = vectors.col(order[static_cast<size_t>(j)]);
  }
  return out;
}

namespace {

HermitianOperator assemble(const EigenDecomposition& e, const RealVector& f_values) {
  Matrix out = e.vectors * f_values.asDiagonal() * e.vectors.adjoint();
  return HermitianOperator::hermitian_part(out);
}

}  // namespace

HermitianOperator matrix_function(const HermitianOperator& m, const std::function<double(double)>& f) {
  const auto e = eig_hermitian(m);
  RealVector fv(e.values.size());
  for (Index i = 0; i < fv.size(); ++i) fv(i) = f(e.values(i));
  return assemble(e, fv);
}

HermitianOperator matrix_function_psd(const HermitianOperator& m, const std::function<double(double)>& f,
                                      double domain_floor) {
  const auto e = eig_hermitian(m);
  RealVector fv(e.values.size());
  for (Index i = 0; i < fv.size(); ++i) {
    double lambda = e.values(i);
    if (lambda < domain_floor) {
      std::ostringstream os;
      os << "eigenvalue " << lambda << " below domain floor " << domain_floor;
      throw NotPositiveSemidefinite(os.str());
    }
    if (lambda < 0.0) lambda = 0.0;
    fv(i) = f(lambda);
  }
  return assemble(e, fv);
}

HermitianOperator matrix_sqrt(const HermitianOperator& m, double domain_floor) {
  return matrix_function_psd(m, [](double x) { return std::sqrt(x); }, domain_floor);
}

HermitianOperator matrix_power(const HermitianOperator& m, double k, double domain_floor) {
  return matrix_function_psd(
      m, [k](double x) { return x > 0.0 ? std::pow(x, k) : 0.0; }, domain_floor);
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

Matrix commutator(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

Matrix anticommutator(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "anticommutator");
  return a * b + b * a;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix dagger(const Matrix& m) { return m.adjoint(); }

Complex trace(const Matrix& m) { return m.trace(); }

double trace_product_real(const Matrix& a, const Matrix& b) {
  // tr(AB) = sum_ij A_ij B_ji
  return (a.array() * b.transpose().array()).sum().real();
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index dim) {
  if (v.size() != dim * dim) throw DimensionMismatch("unvec: vector length is not dim^2");
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix identity(Index dim) { return Matrix::Identity(dim, dim); }

Vector basis_ket(Index dim, Index i) {
  Vector v = Vector::Zero(dim);
  v(i) = 1.0;
  return v;
}

Matrix ket_bra(const Vector& psi) { return psi * psi.adjoint(); }

}  // namespace qsl
