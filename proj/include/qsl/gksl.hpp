#pragma once

// Generators of Markovian dynamics and a fixed-step RK4 integrator.

#include <functional>
#include <memory>
#include <vector>

#include "qsl/quantum_state.hpp"

namespace qsl {

struct LindbladTerm {
  Matrix jump;
  double rate = 0.0;
};

using Schedule = std::function<double(double)>;

/// A linear map on operators, possibly time dependent. Immutable; copies
/// share structure.
///
/// Forms: GKSL (H, {L_k, gamma_k}), explicit d^2 x d^2 superoperator on
/// column-stacked operators, sums, scalar schedules, and local embeddings
/// into a tensor product.
class Generator {
 public:
  enum class Kind { Gksl, Linear, Sum, Scaled, Embedded };

  static Generator zero(Index dim);
  static Generator hamiltonian(const HermitianOperator& h);
  static Generator gksl(const HermitianOperator& h, std::vector<LindbladTerm> terms);
  /// Checked on a probe basis: Hermiticity preserving and trace annihilating
  /// within 1e-10.
  static Generator linear(const Matrix& superop);
  /// Same, without the probe checks.
  static Generator linear_unchecked(const Matrix& superop);
  static Generator sum(std::vector<Generator> parts);
  static Generator scaled(Schedule schedule, Generator inner);
  static Generator scaled(double coefficient, Generator inner);
  /// inner acts on the middle factor of C^left (x) C^site (x) C^right.
  static Generator embedded(Generator inner, Index left_dim, Index right_dim);

  Kind kind() const;
  Index dim() const;
  bool time_dependent() const;

  Matrix apply(const Matrix& x, double t = 0.0) const;
  Matrix adjoint_apply(const Matrix& a, double t = 0.0) const;
  /// d^2 x d^2 matrix acting on vec(X).
  Matrix superoperator(double t = 0.0) const;

  /// Decomposition sum_i c_i(t) S_i with constant superoperators S_i; a null
  /// coefficient means c_i = 1.
  struct AffineTerm {
    Schedule coefficient;
    Matrix superop;
  };
  std::vector<AffineTerm> affine_terms() const;

  Generator operator+(const Generator& other) const;

  struct Node;

 private:
  explicit Generator(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

inline Generator operator*(double c, const Generator& g) { return Generator::scaled(c, g); }

HermitianOperator adjoint_apply(const Generator& g, const HermitianOperator& a, double t = 0.0);

/// Superoperator of X -> A X B.
Matrix sandwich_superop(const Matrix& a, const Matrix& b);
/// Superoperator of X -> -i[H, X].
Matrix hamiltonian_superop(const Matrix& h);
/// Superoperator of X -> L X L^dagger - 1/2 {L^dagger L, X}.
Matrix dissipator_superop(const Matrix& jump);

struct IntegratorConfig {
  double h_int = 1e-3;
  std::vector<double> output_times;
  bool hermitize_each_step = true;
  double trace_drift_tol = 1e-8;
  double positivity_tol = 1e-8;

  void validate() const;
};

/// t_max * k / intervals for k = 0..intervals.
std::vector<double> uniform_grid(double t_max, int intervals);
/// Grid plus an internal step no larger than the output spacing.
IntegratorConfig make_config(double t_max, int intervals, double h_int);

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;

  size_t size() const noexcept { return times.size(); }
};

/// rho0 is taken as the state at output_times.front().
Trajectory integrate(const Generator& g, const DensityMatrix& rho0, const IntegratorConfig& cfg);

std::pair<Trajectory, Trajectory> propagate_pair(const Generator& g_free, const Generator& g_pert,
                                                 const DensityMatrix& rho0, const IntegratorConfig& cfg);

}  // namespace qsl
