#pragma once

// Speed limits evaluated along integrated trajectories.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsl/info_measures.hpp"
#include "qsl/weak_coupling.hpp"

namespace qsl {

/// Margins in [-kMarginNoise, 0) count as round-off; anything lower is a violation.
inline constexpr double kMarginNoise = 1e-6;

struct BoundReport {
  std::string name;
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> margin;  ///< rhs - lhs
  std::map<std::string, double> params;
  std::vector<std::string> warnings;

  void push(double t, double l, double r);
  double min_margin() const;
  bool holds(double slack = kMarginNoise) const { return min_margin() >= -slack; }
};

struct ErrorBudget {
  std::vector<double> times;
  std::vector<double> delta_est;
  std::vector<double> delta1;
  std::vector<double> delta2;
  double epsilon_used = 0.0;
  double epsilon_sampled = 0.0;
  double v = 0.0;
  double norm_v = 0.0;
};

/// Cumulative trapezoid integral, starting at 0.
std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& y);

/// theta_B(rho_t, sigma_t) <= 1/2 int sqrt(F(sigma_s, P_s)) ds, where rho
/// evolves under `free` and sigma under free + pert.
BoundReport result1_bound(const Generator& free, const Generator& pert, const DensityMatrix& rho0,
                          const IntegratorConfig& cfg);

struct RmsForm {
  double direct;  ///< int |v_s| sqrt(F_s) ds
  double rms;     ///< t <v^2>^{1/2} <F>^{1/2}
};

RmsForm rms_coefficient(const std::vector<double>& v_values, const std::vector<double>& times,
                        const std::vector<double>& qfi_values);

/// |d/dt tr[A(rho_t - sigma_t)]| <= 2 ||L^dagger(A)|| D_tr(rho_t, sigma_t) + sqrt(Var(sigma_t, A) F(sigma_t, P_t))
BoundReport result2_bound(const Generator& free, const Generator& pert, const HermitianOperator& a,
                          const DensityMatrix& rho0, const IntegratorConfig& cfg);

/// (4 sqrt2 / 3) ||V|| sqrt(eps) (vt)^{3/2} + eps v t
double delta_est(double t, double v, double norm_v, double epsilon);

enum class PerturbedDynamics {
  ExactRebuild,  ///< secular master equation rebuilt at H + vV
  FirstOrder,    ///< L + vV + v(H1_LS + D1)
};

struct WeakCouplingRun {
  Trajectory rho;    ///< free
  Trajectory sigma;  ///< L + vV
  Trajectory eta;    ///< perturbed weak-coupling dynamics
  std::vector<double> sqrt_qfi_sigma;
  std::vector<double> sqrt_qfi_eta;
};

WeakCouplingRun run_weak_coupling(const PerturbedProblem& problem, const DensityMatrix& rho0,
                                  const IntegratorConfig& cfg,
                                  PerturbedDynamics dynamics = PerturbedDynamics::ExactRebuild);

struct Result3Report {
  BoundReport estimate;     ///< rhs uses Delta_est with epsilon_upper
  BoundReport exact_error;  ///< rhs uses Delta_1 + Delta_2
  ErrorBudget budget;
};

Result3Report result3_bound(const PerturbedProblem& problem, const DensityMatrix& rho0, const IntegratorConfig& cfg,
                            PerturbedDynamics dynamics = PerturbedDynamics::ExactRebuild);
Result3Report result3_bound(const WeakCouplingRun& run, const PerturbedProblem& problem);
Result3Report result3_bound(const WeakCouplingModel& model, const HermitianOperator& v_op, double v,
                            const DensityMatrix& rho0, const IntegratorConfig& cfg, const ProblemOptions& opts = {});

/// 2 arccos B(p, q) / (t v)
double witness_statistic(const ProbDist& p, const ProbDist& q, double t, double v);

struct Result4Report {
  BoundReport report;
  ErrorBudget budget;
  double ibar = 0.0;
  double variance = 0.0;
  double qfi = 0.0;  ///< F(rho_th, -i[Delta H, .])
  bool classical_driving = false;
  bool quantum_driving = false;
};

/// theta_B(rho_th, rho_t) <= t sqrt(3 Ibar(rho_th, Delta H)) + Delta_est(t) after the
/// quench H -> H'. The error term comes from the weak-coupling expansion around H'
/// with perturbation -Delta H.
Result4Report result4_bound(const WeakCouplingModel& model, const HermitianOperator& h_prime, double beta,
                            const IntegratorConfig& cfg, const ProblemOptions& opts = {});

struct FdrRecord {
  double var_w;
  double w_diss_exact;
  double kubo_mori_half_beta;
  double q_w;
  double residual;
};

FdrRecord fdr_check(const HermitianOperator& h, const HermitianOperator& delta_h, double beta);

struct LinearResponseReport {
  BoundReport norm_bound;         ///< ||A|| sqrt(F(pi, V)) [int |v| + Delta]
  BoundReport fluctuation_bound;  ///< sqrt(Var(pi, A) F(pi, V)) [int |v| + Delta]
};

LinearResponseReport linear_response_bounds(const Generator& free, const DensityMatrix& pi, const HermitianOperator& a,
                                            const HermitianOperator& v_op, const Schedule& v_schedule,
                                            const IntegratorConfig& cfg, double epsilon);

struct UhlmannReport {
  BoundReport report;
  std::optional<double> mandelstam_tamm_time;  ///< pi / (2 sqrt(Var)) for pure initial states
  std::optional<double> orthogonality_time;    ///< first grid crossing of theta_B = pi/2
};

/// Closed-system check theta_B(rho_0, rho_t) <= 1/2 int sqrt(F(rho_s, H_s)) for
/// H_s = c(s) H. An empty schedule means c = 1.
UhlmannReport uhlmann_regression(const HermitianOperator& h, const Schedule& schedule, const DensityMatrix& rho0,
                                 const IntegratorConfig& cfg);

}  // namespace qsl
