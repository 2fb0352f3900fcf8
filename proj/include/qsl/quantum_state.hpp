#pragma once

#include <vector>

#include "qsl/linalg.hpp"

namespace qsl {

class PureState;

/// Unit-trace positive semidefinite operator.
class DensityMatrix {
 public:
  /// `psd_tol` is the most negative eigenvalue accepted (as a positive number).
  explicit DensityMatrix(const Matrix& m, double psd_tol = -kPsdFloor);
  explicit DensityMatrix(const PureState& psi);

  static DensityMatrix maximally_mixed(Index dim);

  const HermitianOperator& op() const noexcept { return op_; }
  const Matrix& matrix() const noexcept { return op_.matrix(); }
  Index dim() const noexcept { return op_.dim(); }

 private:
  HermitianOperator op_;
};

class PureState {
 public:
  explicit PureState(Vector amplitudes);

  /// Normalizes a nonzero vector.
  static PureState normalized(const Vector& v);

  const Vector& amplitudes() const noexcept { return a_; }
  Index dim() const noexcept { return a_.size(); }
  Matrix projector() const { return ket_bra(a_); }

 private:
  Vector a_;
};

/// A POVM. The effects sum to the identity within 1e-10.
class Measurement {
 public:
  explicit Measurement(std::vector<Matrix> effects);

  /// Projective measurement onto the orthonormal columns of `basis`.
  static Measurement projective(const Matrix& basis);
  static Measurement computational(Index dim);

  const std::vector<Matrix>& effects() const noexcept { return effects_; }
  size_t size() const noexcept { return effects_.size(); }
  Index dim() const { return effects_.front().rows(); }

 private:
  std::vector<Matrix> effects_;
};

class ProbDist {
 public:
  explicit ProbDist(std::vector<double> p);

  const std::vector<double>& probabilities() const noexcept { return p_; }
  size_t size() const noexcept { return p_.size(); }
  double operator[](size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)), computed as the sum of
/// singular values of sqrt(rho) sqrt(sigma). Clamped to [0, 1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
/// Same quantity through the eigenvalues of sqrt(rho) sigma sqrt(rho).
double fidelity_eig(const DensityMatrix& rho, const DensityMatrix& sigma);

double bures_angle(const DensityMatrix& rho, const DensityMatrix& sigma);
double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

ProbDist measure(const DensityMatrix& rho, const Measurement& m);
double bhattacharyya(const ProbDist& p, const ProbDist& q);

/// e^{-beta H} / tr e^{-beta H}, evaluated in the eigenbasis of H with the
/// ground energy subtracted so every exponent is <= 0.
DensityMatrix gibbs_state(const HermitianOperator& h, double beta);

double expectation(const DensityMatrix& rho, const HermitianOperator& a);
double variance(const DensityMatrix& rho, const HermitianOperator& a);

/// (|00> + |11>)/sqrt2, (|00> - |11>)/sqrt2, (|01> + |10>)/sqrt2, (|01> - |10>)/sqrt2
PureState bell_state(int index);
Measurement bell_measurement();

}  // namespace qsl
