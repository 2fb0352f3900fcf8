#pragma once

// Built-in models and figure pipelines.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsl/speed_limits.hpp"

namespace qsl {

struct Scenario {
  std::string name;
  PerturbedProblem problem;
  DensityMatrix rho0;
  std::optional<Measurement> measurement;
  std::optional<double> threshold;  ///< F*
  double t_max = 2.0;
  int intervals = 400;
  double h_int = 0.005;

  IntegratorConfig config() const;
};

/// min{tau_S, tau_V, tau_R} / 200
double default_step(const TimescaleReport& ts);

/// Two qubits with H = (h/2)(Z1 + Z2), local dephasing at rate lambda^2 gamma0,
/// V = (X1 + X2)/2, Bell initial state, Bell-basis measurement, F* = 2.
Scenario two_qubit_dephasing(double h = 1.0, double lambda = 0.1, double gamma0 = 0.1, double v = 0.1,
                             const ProblemOptions& opts = {});

struct Fig2Row {
  double t;
  double measured_speed;
  double exact_avg_sqrt_qfi;
  double corrected_lower_bound;
  double threshold;
};

struct Fig2Table {
  std::vector<Fig2Row> rows;  ///< t > 0 only
  double epsilon = 0.0;
  std::optional<double> exact_crossing;
  std::optional<double> measured_crossing;
  std::optional<double> corrected_crossing;
};

/// shots = 0 uses exact probabilities; otherwise both distributions are
/// replaced by multinomial frequencies drawn with `seed`.
Fig2Table fig2_run(const Scenario& s, const IntegratorConfig& cfg, int shots = 0, std::uint64_t seed = 0,
                   PerturbedDynamics dynamics = PerturbedDynamics::ExactRebuild);
Fig2Table fig2_table(const Scenario& s, const WeakCouplingRun& run, int shots = 0, std::uint64_t seed = 0);

struct Fig3Row {
  double t;
  double delta1;
  double delta2;
  double delta1_plus_delta2;
  double delta_est;
};

std::vector<Fig3Row> fig3_run(const Scenario& s, const IntegratorConfig& cfg,
                              PerturbedDynamics dynamics = PerturbedDynamics::ExactRebuild);
std::vector<Fig3Row> fig3_table(const Scenario& s, const WeakCouplingRun& run);

/// First t at which y falls from above `level` to at or below it, by linear
/// interpolation between grid points.
std::optional<double> first_crossing_below(const std::vector<double>& t, const std::vector<double>& y, double level);

struct QuenchScenario {
  WeakCouplingModel model;
  HermitianOperator h_prime;
  double beta;
  double ibar;
  bool classical_driving;
  bool quantum_driving;
};

/// Sudden quench H -> H + Delta H from the Gibbs state of H. The bath must
/// leave that Gibbs state stationary.
QuenchScenario quench_scenario(const HermitianOperator& h, const HermitianOperator& delta_h, double beta,
                               const std::vector<HermitianOperator>& couplings, double lambda,
                               const BathSpectrum& bath, double t_max = 2.0, const ProblemOptions& opts = {});

struct RandomInstance {
  Index dim;
  HermitianOperator h;
  std::vector<LindbladTerm> terms;
  Generator free;
  HermitianOperator v_op;  ///< ||V|| = 1
  double v;
  Generator pert;  ///< v (-i[V, .])
  DensityMatrix rho0;
  HermitianOperator observable;  ///< ||A|| <= 1
};

/// Deterministic per seed. dim in [2, 8].
RandomInstance random_instance(Index dim, std::uint64_t seed, double rate_cap = 1.0, double v_cap = 0.2);

struct RandomWeakCoupling {
  WeakCouplingModel model;
  HermitianOperator v_op;
  double v;
  DensityMatrix rho0;
};

/// Random nondegenerate H with level spacing >= 1, one Ohmic-bath coupling per
/// instance, and parameters inside the weak-coupling regime.
RandomWeakCoupling random_weak_coupling(Index dim, std::uint64_t seed);

}  // namespace qsl
