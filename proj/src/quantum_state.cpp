#include "qsl/quantum_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

namespace qsl {

namespace {

constexpr double kTraceTol = 1e-9;
constexpr double kProbTol = 1e-9;
constexpr double kNegativeProbTol = 1e-10;
constexpr double kCompletenessTol = 1e-10;

HermitianOperator checked_state_operator(const Matrix& m, double psd_tol) {
  HermitianOperator op(m);
  const double tr = op.matrix().trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream os;
    os << "density matrix trace " << tr << " differs from 1";
    throw InvalidState(os.str());
  }
  const double min_eig = eig_hermitian(op).values(0);
  if (min_eig < -psd_tol) {
    std::ostringstream os;
    os << "density matrix has eigenvalue " << min_eig;
    throw InvalidState(os.str());
  }
  return op;
}

// Eigenvalues of a unit-trace operator below this are round-off.
double roundoff_floor(Index dim) { return 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(dim); }

HermitianOperator clamped_sqrt(const HermitianOperator& m) {
  const double floor = roundoff_floor(m.dim());
  return matrix_function(m, [floor](double x) { return x > floor ? std::sqrt(x) : 0.0; });
}

void require_same_dim(const DensityMatrix& a, const DensityMatrix& b, const char* what) {
  if (a.dim() != b.dim()) throw DimensionMismatch(std::string(what) + ": states have different dimensions");
}

}  // namespace

DensityMatrix::DensityMatrix(const Matrix& m, double psd_tol) : op_(checked_state_operator(m, psd_tol)) {}

DensityMatrix::DensityMatrix(const PureState& psi) : op_(HermitianOperator::hermitian_part(psi.projector())) {}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

PureState::PureState(Vector amplitudes) : a_(std::move(amplitudes)) {
  if (a_.size() < 1) throw DimensionMismatch("PureState: empty amplitude vector");
  if (!a_.allFinite()) throw InvalidArgument("PureState: non-finite amplitude");
  if (std::abs(a_.norm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "PureState: norm " << a_.norm() << " is not 1";
    throw InvalidState(os.str());
  }
}

PureState PureState::normalized(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw InvalidArgument("PureState::normalized: zero vector");
  return PureState(v / n);
}

Measurement::Measurement(std::vector<Matrix> effects) : effects_(std::move(effects)) {
  if (effects_.empty()) throw InvalidArgument("Measurement: no effects");
  const Index d = effects_.front().rows();
  Matrix total = Matrix::Zero(d, d);
  for (auto& e : effects_) {
    require_square(e, "Measurement");
    if (e.rows() != d) throw DimensionMismatch("Measurement: effects have different dimensions");
    const HermitianOperator h(e);
    if (eig_hermitian(h).values(0) < kPsdFloor) throw NotPositiveSemidefinite("Measurement: effect is not PSD");
    e = h.matrix();
    total += e;
  }
  const double defect = (total - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (defect > kCompletenessTol) {
    std::ostringstream os;
    os << "Measurement: effects sum to identity only within " << defect;
    throw InvalidArgument(os.str());
  }
}

Measurement Measurement::projective(const Matrix& basis) {
  require_square(basis, "Measurement::projective");
  std::vector<Matrix> effects;
  effects.reserve(static_cast<size_t>(basis.cols()));
  for (Index j = 0; j < basis.cols(); ++j) effects.push_back(ket_bra(basis.col(j)));
  return Measurement(std::move(effects));
}

Measurement Measurement::computational(Index dim) { return projective(Matrix::Identity(dim, dim)); }

ProbDist::ProbDist(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw InvalidArgument("ProbDist: empty");
  double sum = 0.0;
  for (double x : p_) {
    if (!std::isfinite(x) || x < 0.0) throw InvalidArgument("ProbDist: negative or non-finite probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kProbTol) {
    std::ostringstream os;
    os << "ProbDist: probabilities sum to " << sum;
    throw InvalidArgument(os.str());
  }
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho, sigma, "fidelity");
  const Matrix product = clamped_sqrt(rho.op()).matrix() * clamped_sqrt(sigma.op()).matrix();
  Eigen::JacobiSVD<Matrix> svd(product);
  return std::clamp(svd.singularValues().sum(), 0.0, 1.0);
}

double fidelity_eig(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho, sigma, "fidelity_eig");
  const Matrix s = clamped_sqrt(rho.op()).matrix();
  const auto inner = HermitianOperator::hermitian_part(s * sigma.matrix() * s);
  const auto e = eig_hermitian(inner);
  double f = 0.0;
  const double floor = roundoff_floor(rho.dim());
  for (Index i = 0; i < e.values.size(); ++i) f += e.values(i) > floor ? std::sqrt(e.values(i)) : 0.0;
  return std::clamp(f, 0.0, 1.0);
}

double bures_angle(const DensityMatrix& rho, const DensityMatrix& sigma) { return std::acos(fidelity(rho, sigma)); }

double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return std::sqrt(2.0 * (1.0 - fidelity(rho, sigma)));
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho, sigma, "trace_distance");
  const auto diff = HermitianOperator::hermitian_part(rho.matrix() - sigma.matrix());
  return std::min(0.5 * eig_hermitian(diff).values.cwiseAbs().sum(), 1.0);
}

ProbDist measure(const DensityMatrix& rho, const Measurement& m) {
  if (m.dim() != rho.dim()) throw DimensionMismatch("measure: measurement and state dimensions differ");
  std::vector<double> p;
  p.reserve(m.size());
  double sum = 0.0;
  for (const auto& e : m.effects()) {
    double x = trace_product_real(e, rho.matrix());
    if (x < -kNegativeProbTol) {
      std::ostringstream os;
      os << "measure: negative probability " << x;
      throw InvalidState(os.str());
    }
    x = std::max(x, 0.0);
    p.push_back(x);
    sum += x;
  }
  if (std::abs(sum - 1.0) > kProbTol) {
    std::ostringstream os;
    os << "measure: probabilities sum to " << sum;
    throw InvalidState(os.str());
  }
  for (double& x : p) x /= sum;
  return ProbDist(std::move(p));
}

double bhattacharyya(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size()) throw DimensionMismatch("bhattacharyya: distributions have different lengths");
  double b = 0.0;
  for (size_t i = 0; i < p.size(); ++i) b += std::sqrt(p[i] * q[i]);
  return std::clamp(b, 0.0, 1.0);
}

DensityMatrix gibbs_state(const HermitianOperator& h, double beta) {
  if (!std::isfinite(beta) || beta < 0.0) throw InvalidArgument("gibbs_state: beta must be finite and >= 0");
  const auto e = eig_hermitian(h);
  const double e0 = e.values(0);
  RealVector w(e.values.size());
  for (Index i = 0; i < w.size(); ++i) w(i) = std::exp(-beta * (e.values(i) - e0));
  w /= w.sum();
  Matrix rho = e.vectors * w.asDiagonal() * e.vectors.adjoint();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

double expectation(const DensityMatrix& rho, const HermitianOperator& a) {
  if (rho.dim() != a.dim()) throw DimensionMismatch("expectation: dimension mismatch");
  return trace_product_real(rho.matrix(), a.matrix());
}

double variance(const DensityMatrix& rho, const HermitianOperator& a) {
  if (rho.dim() != a.dim()) throw DimensionMismatch("variance: dimension mismatch");
  const double mean = trace_product_real(rho.matrix(), a.matrix());
  const Matrix a2 = a.matrix() * a.matrix();
  return std::max(trace_product_real(rho.matrix(), a2) - mean * mean, 0.0);
}

PureState bell_state(int index) {
  const double s = 1.0 / std::numbers::sqrt2;
  Vector v = Vector::Zero(4);
  switch (index) {
    case 0: v << s, 0, 0, s; break;
    case 1: v << s, 0, 0, -s; break;
    case 2: v << 0, s, s, 0; break;
    case 3: v << 0, s, -s, 0; break;
    default: throw InvalidArgument("bell_state: index must be 0..3");
  }
  return PureState::normalized(v);
}

Measurement bell_measurement() {
  Matrix basis(4, 4);
  for (int i = 0; i < 4; ++i) basis.col(i) = bell_state(i).amplitudes();
  return Measurement::projective(basis);
}

}  // namespace qsl
