#pragma once

// Secular weak-coupling master equations and their first-order response to a
// Hamiltonian perturbation H -> H + vV.
//
// Sign convention: a Bohr frequency is omega = E_m - E_n and the component
// A(omega) = sum Pi_m A Pi_n satisfies [H, A(omega)] = omega A(omega).

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qsl/gksl.hpp"

namespace qsl {

using SpectralFunction = std::function<double(int alpha, int beta, double omega)>;

/// gamma(w) is the rate at which the system hands energy w to the bath.
struct BathSpectrum {
  SpectralFunction gamma;
  SpectralFunction s_shift;      ///< may be empty (treated as 0)
  SpectralFunction gamma_deriv;  ///< may be empty (finite differences)
  SpectralFunction s_deriv;      ///< may be empty (finite differences)
  double tau_B = 0.0;
};

/// gamma(w) = 2 pi eta w e^{-|w|/w_c} / (1 - e^{-beta w}), diagonal in the
/// coupling index, S = 0, tau_B = beta.
BathSpectrum ohmic_gamma(double eta, double omega_c, double beta_bath);
/// gamma(w) = gamma0 for every w, S = 0, tau_B = 0.
BathSpectrum flat_spectrum(double gamma0);

struct WeakCouplingModel {
  HermitianOperator h;
  std::vector<HermitianOperator> couplings;
  double lambda = 0.0;
  BathSpectrum bath;

  void validate() const;
};

struct BohrCluster {
  double omega = 0.0;
  std::vector<std::pair<Index, Index>> pairs;  ///< (m, n) with E_m - E_n in this cluster
};

struct BohrStructure {
  EigenDecomposition eig;
  std::vector<BohrCluster> clusters;  ///< ascending omega
  double tol_omega = 0.0;
};

/// Gap clusters of a nondegenerate H (single linkage within tol_omega).
BohrStructure bohr_structure(const HermitianOperator& h, double tol_omega);
/// sum_{(m,n) in cluster} Pi_m A Pi_n
Matrix bohr_component(const BohrStructure& s, const BohrCluster& c, const Matrix& a);

struct BohrComponent {
  double omega;
  Matrix op;
};

/// Nonzero components of A, ascending in omega.
std::vector<BohrComponent> bohr_decompose(const HermitianOperator& h, const HermitianOperator& a, double tol_omega);

double default_tol_omega(const HermitianOperator& h);

struct SecularME {
  BohrStructure bohr;
  /// components[c][alpha] = A_alpha(omega_c)
  std::vector<std::vector<Matrix>> components;
  HermitianOperator h_ls;
  std::vector<LindbladTerm> terms;
  Generator generator;
};

/// tol_omega <= 0 selects default_tol_omega(model.h).
SecularME build_secular_me(const WeakCouplingModel& model, double tol_omega = 0.0);
/// Secular generator for model.h using the pair clustering of `reference`
/// (an unperturbed structure whose levels map one-to-one onto model.h's).
SecularME build_secular_me_like(const WeakCouplingModel& model, const BohrStructure& reference);

struct FirstOrderPerturbation {
  EigenDecomposition eig;
  RealVector e1;          ///< <n|V|n>
  Matrix c;               ///< c(n, m) = <m|V|n> / (E_n - E_m), zero on the diagonal
  std::vector<Matrix> q;  ///< Q_n
};

FirstOrderPerturbation perturb_eigensystem(const HermitianOperator& h, const HermitianOperator& v);

struct BrokenDegeneracy {
  double omega;
  double shift_a;
  double shift_b;
};

struct DegeneracyReport {
  bool broken = false;
  std::vector<BrokenDegeneracy> clusters;
  std::string advisory;
};

/// Flags Bohr clusters whose first-order shifts E1_m - E1_n disagree by more
/// than tol.
DegeneracyReport degeneracy_break_check(const SecularME& me, const FirstOrderPerturbation& pert, double tol = 1e-9);

struct PerturbationExpansion {
  RealVector e1;
  Matrix c;
  std::vector<Matrix> q;
  std::vector<std::vector<Matrix>> a1;  ///< a1[c][alpha]
  std::vector<double> delta_omega;      ///< first-order shift per cluster, per unit v
  HermitianOperator h1_ls;
  Generator d1;          ///< dissipator correction, explicit superoperator
  Generator correction;  ///< -i[H1_LS, .] + D1
  double epsilon_sampled = 0.0;
  double epsilon_upper = 0.0;
};

/// Raises DegeneracyBroken when degeneracy_break_check flags a cluster.
PerturbationExpansion first_order_generators(const WeakCouplingModel& model, const SecularME& me,
                                             const FirstOrderPerturbation& pert, double degeneracy_tol = 1e-9,
                                             int epsilon_samples = 2000, std::uint64_t seed = 1);

struct EpsilonEstimate {
  double sampled;  ///< max over Haar-random pure states of ||G(psi)||_op
  double upper;    ///< spectral norm of the superoperator
};

EpsilonEstimate epsilon(const Generator& correction, int sample_count, std::uint64_t seed);

struct TimescaleReport {
  double tau_S = 0.0;
  double tau_V = std::numeric_limits<double>::infinity();
  double tau_R = std::numeric_limits<double>::infinity();
  double tau_B = 0.0;
  bool born_markov = false;         ///< (i) tau_B << tau_R
  bool rotating_wave = false;       ///< (ii) tau_S << tau_R
  bool weak_vs_bath = false;        ///< (iii) tau_B << tau_V
  bool weak_vs_system = false;      ///< (iv) tau_S << tau_V
  bool all() const { return born_markov && rotating_wave && weak_vs_bath && weak_vs_system; }
};

inline constexpr double kTimescaleRatio = 0.1;

TimescaleReport timescales(const WeakCouplingModel& model, double v, double tol_omega = 0.0);

/// Everything the bounds need about one perturbed weak-coupling system.
struct PerturbedProblem {
  Generator free;             ///< L
  Generator v_gen;            ///< -i[V, .]
  Generator correction;       ///< H1_LS + D1 (per unit v)
  Generator exact_perturbed;  ///< secular rebuild at H + vV
  HermitianOperator v_op;
  double v = 0.0;
  double norm_v = 0.0;
  double epsilon_sampled = 0.0;
  double epsilon_upper = 0.0;
  TimescaleReport timescales;
  DegeneracyReport degeneracy;

  Index dim() const { return free.dim(); }
  /// L + vV + v(H1_LS + D1)
  Generator first_order_perturbed() const;
  /// L + vV
  Generator hamiltonian_perturbed() const;
};

struct ProblemOptions {
  double tol_omega = 0.0;
  double degeneracy_tol = 1e-9;
  int epsilon_samples = 2000;
  std::uint64_t seed = 1;
};

PerturbedProblem make_perturbed_problem(const WeakCouplingModel& model, const HermitianOperator& v_op, double v,
                                        const ProblemOptions& opts = {});

/// Independent subsystems on C^{d_1} (x) ... (x) C^{d_n}: every generator is
/// embedded locally and summed; epsilon is recomputed on the total correction.
PerturbedProblem combine_local(const std::vector<PerturbedProblem>& sites, const ProblemOptions& opts = {});

/// O (x) 1 placed on factor `site`.
Matrix embed_operator(const Matrix& op, const std::vector<Index>& dims, size_t site);

}  // namespace qsl
