#include "qsl/speed_limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qsl {

void BoundReport::push(double t, double l, double r) {
  times.push_back(t);
  lhs.push_back(l);
  rhs.push_back(r);
  margin.push_back(r - l);
}

double BoundReport::min_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (double x : margin) m = std::min(m, x);
  return m;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw DimensionMismatch("cumulative_trapezoid: length mismatch");
  std::vector<double> out(t.size(), 0.0);
  for (size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

namespace {

std::vector<double> sqrt_qfi_along(const Trajectory& traj, const Generator& g) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (size_t i = 0; i < traj.size(); ++i) out.push_back(std::sqrt(qfi(traj.states[i], g, traj.times[i])));
  return out;
}

void add_integrator_params(BoundReport& r, const IntegratorConfig& cfg) {
  r.params["h_int"] = cfg.h_int;
  r.params["points"] = static_cast<double>(cfg.output_times.size());
}

std::string failed_flags(const TimescaleReport& ts) {
  std::string s;
  auto add = [&](bool ok, const char* name) {
    if (ok) return;
    if (!s.empty()) s += ", ";
    s += name;
  };
  add(ts.born_markov, "(i) tau_B << tau_R");
  add(ts.rotating_wave, "(ii) tau_S << tau_R");
  add(ts.weak_vs_bath, "(iii) tau_B << tau_V");
  add(ts.weak_vs_system, "(iv) tau_S << tau_V");
  return s;
}

}  // namespace

BoundReport result1_bound(const Generator& free, const Generator& pert, const DensityMatrix& rho0,
                          const IntegratorConfig& cfg) {
  const auto [rho, sigma] = propagate_pair(free, free + pert, rho0, cfg);
  const auto speed = sqrt_qfi_along(sigma, pert);
  const auto integral = cumulative_trapezoid(sigma.times, speed);
  BoundReport r;
  r.name = "result1";
  add_integrator_params(r, cfg);
  for (size_t i = 0; i < rho.size(); ++i) r.push(rho.times[i], bures_angle(rho.states[i], sigma.states[i]), 0.5 * integral[i]);
  return r;
}

RmsForm rms_coefficient(const std::vector<double>& v_values, const std::vector<double>& times,
                        const std::vector<double>& qfi_values) {
  if (v_values.size() != times.size() || qfi_values.size() != times.size())
    throw DimensionMismatch("rms_coefficient: length mismatch");
  if (times.empty()) return {0.0, 0.0};
  std::vector<double> direct(times.size()), v2(times.size()), f(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    const double fi = std::max(qfi_values[i], 0.0);
    direct[i] = std::abs(v_values[i]) * std::sqrt(fi);
    v2[i] = v_values[i] * v_values[i];
    f[i] = fi;
  }
  const double d = cumulative_trapezoid(times, direct).back();
  const double iv2 = cumulative_trapezoid(times, v2).back();
  const double iff = cumulative_trapezoid(times, f).back();
  return {d, std::sqrt(iv2 * iff)};
}

BoundReport result2_bound(const Generator& free, const Generator& pert, const HermitianOperator& a,
                          const DensityMatrix& rho0, const IntegratorConfig& cfg) {
  if (a.dim() != free.dim()) throw DimensionMismatch("result2_bound: observable dimension mismatch");
  const auto [rho, sigma] = propagate_pair(free, free + pert, rho0, cfg);
  BoundReport r;
  r.name = "result2";
  add_integrator_params(r, cfg);
  for (size_t i = 0; i < rho.size(); ++i) {
    const double t = rho.times[i];
    const Matrix& rm = rho.states[i].matrix();
    const Matrix& sm = sigma.states[i].matrix();
    const Matrix drift = free.apply(rm, t) - free.apply(sm, t) - pert.apply(sm, t);
    const double lhs = std::abs((a.matrix() * drift).trace());
    const double adj_norm = operator_norm(free.adjoint_apply(a.matrix(), t));
    const double f = qfi(sigma.states[i], pert, t);
    const double rhs = 2.0 * adj_norm * trace_distance(rho.states[i], sigma.states[i]) +
                       std::sqrt(variance(sigma.states[i], a) * f);
    r.push(t, lhs, rhs);
  }
  return r;
}

double delta_est(double t, double v, double norm_v, double epsilon) {
  if (t < 0.0 || v < 0.0 || norm_v < 0.0 || epsilon < 0.0) throw InvalidArgument("delta_est: arguments must be >= 0");
  const double vt = v * t;
  return 4.0 * std::numbers::sqrt2 / 3.0 * norm_v * std::sqrt(epsilon) * std::pow(vt, 1.5) + epsilon * vt;
}

WeakCouplingRun run_weak_coupling(const PerturbedProblem& problem, const DensityMatrix& rho0,
                                  const IntegratorConfig& cfg, PerturbedDynamics dynamics) {
  WeakCouplingRun run;
  run.rho = integrate(problem.free, rho0, cfg);
  run.sigma = integrate(problem.hamiltonian_perturbed(), rho0, cfg);
  run.eta = integrate(dynamics == PerturbedDynamics::ExactRebuild ? problem.exact_perturbed
                                                                  : problem.first_order_perturbed(),
                      rho0, cfg);
  run.sqrt_qfi_sigma = sqrt_qfi_along(run.sigma, problem.v_gen);
  run.sqrt_qfi_eta = sqrt_qfi_along(run.eta, problem.v_gen);
  return run;
}

Result3Report result3_bound(const WeakCouplingRun& run, const PerturbedProblem& problem) {
  const auto& times = run.rho.times;
  const double v = problem.v;
  const auto int_eta = cumulative_trapezoid(times, run.sqrt_qfi_eta);
  const auto int_sigma = cumulative_trapezoid(times, run.sqrt_qfi_sigma);

  Result3Report out;
  out.estimate.name = "result3";
  out.exact_error.name = "result3_exact_error";
  auto& b = out.budget;
  b.times = times;
  b.epsilon_used = problem.epsilon_upper;
  b.epsilon_sampled = problem.epsilon_sampled;
  b.v = v;
  b.norm_v = problem.norm_v;
  for (auto* r : {&out.estimate, &out.exact_error}) {
    r->params["v"] = v;
    r->params["norm_V"] = problem.norm_v;
    r->params["epsilon_upper"] = problem.epsilon_upper;
    r->params["epsilon_sampled"] = problem.epsilon_sampled;
    if (!problem.timescales.all()) r->warnings.push_back("timescale assumptions fail: " + failed_flags(problem.timescales));
    if (problem.degeneracy.broken) r->warnings.push_back(problem.degeneracy.advisory);
  }

  for (size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const double lhs = bures_angle(run.rho.states[i], run.eta.states[i]);
    const double speed = 0.5 * v * int_eta[i];
    const double d1 = 0.5 * v * std::abs(int_sigma[i] - int_eta[i]);
    const double d2 = bures_angle(run.sigma.states[i], run.eta.states[i]);
    const double de = delta_est(t, v, problem.norm_v, problem.epsilon_upper);
    b.delta1.push_back(d1);
    b.delta2.push_back(d2);
    b.delta_est.push_back(de);
    out.estimate.push(t, lhs, speed + de);
    out.exact_error.push(t, lhs, speed + d1 + d2);
  }
  return out;
}

Result3Report result3_bound(const PerturbedProblem& problem, const DensityMatrix& rho0, const IntegratorConfig& cfg,
                            PerturbedDynamics dynamics) {
  auto out = result3_bound(run_weak_coupling(problem, rho0, cfg, dynamics), problem);
  add_integrator_params(out.estimate, cfg);
  add_integrator_params(out.exact_error, cfg);
  return out;
}

Result3Report result3_bound(const WeakCouplingModel& model, const HermitianOperator& v_op, double v,
                            const DensityMatrix& rho0, const IntegratorConfig& cfg, const ProblemOptions& opts) {
  return result3_bound(make_perturbed_problem(model, v_op, v, opts), rho0, cfg);
}

double witness_statistic(const ProbDist& p, const ProbDist& q, double t, double v) {
  if (!(t > 0.0) || !(v > 0.0)) throw DegenerateWitness("witness_statistic: need t > 0 and v > 0");
  return 2.0 * std::acos(bhattacharyya(p, q)) / (t * v);
}

Result4Report result4_bound(const WeakCouplingModel& model, const HermitianOperator& h_prime, double beta,
                            const IntegratorConfig& cfg, const ProblemOptions& opts) {
  if (h_prime.dim() != model.h.dim()) throw DimensionMismatch("result4_bound: H' dimension differs from H");
  cfg.validate();
  const auto rho_th = gibbs_state(model.h, beta);
  const auto before = build_secular_me(model, opts.tol_omega);
  const double residual = before.generator.apply(rho_th.matrix()).cwiseAbs().maxCoeff();
  if (residual > 1e-6) {
    std::ostringstream os;
    os << "result4_bound: Gibbs state is not stationary under the pre-quench generator (residual " << residual << ")";
    throw NotStationary(os.str());
  }

  const HermitianOperator delta_h = h_prime - model.h;
  const double v = operator_norm(delta_h.matrix());

  Result4Report out;
  out.ibar = ibar(rho_th, delta_h);
  out.variance = variance(rho_th, delta_h);
  out.qfi = qfi(rho_th, Generator::hamiltonian(delta_h));
  out.classical_driving = out.ibar <= 1e-12;

  auto& b = out.budget;
  b.times = cfg.output_times;
  b.v = v;
  b.norm_v = v > 0.0 ? 1.0 : 0.0;

  Trajectory traj;
  if (v > 0.0) {
    WeakCouplingModel after = model;
    after.h = h_prime;
    const auto problem = make_perturbed_problem(after, (-1.0 / v) * delta_h, v, opts);
    b.epsilon_used = problem.epsilon_upper;
    b.epsilon_sampled = problem.epsilon_sampled;
    traj = integrate(problem.free, rho_th, cfg);
    if (!problem.timescales.all())
      out.report.warnings.push_back("timescale assumptions fail: " + failed_flags(problem.timescales));
  } else {
    traj.times = cfg.output_times;
    traj.states.assign(cfg.output_times.size(), rho_th);
  }

  out.report.name = "result4";
  add_integrator_params(out.report, cfg);
  out.report.params["beta"] = beta;
  out.report.params["norm_delta_H"] = v;
  out.report.params["ibar"] = out.ibar;
  out.report.params["epsilon_upper"] = b.epsilon_used;
  const double coherent = std::sqrt(3.0 * out.ibar);
  for (size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    const double de = delta_est(t, v, b.norm_v, b.epsilon_used);
    b.delta_est.push_back(de);
    out.report.push(t, bures_angle(rho_th, traj.states[i]), t * coherent + de);
  }

  if (v > 0.0) {
    const double t = cfg.output_times.back();
    const double eps = b.epsilon_used;
    const double lhs = std::sqrt(out.ibar) / v;
    const double rhs = std::max(std::sqrt(eps * v * t), eps);
    out.quantum_driving = !out.classical_driving && rhs <= kTimescaleRatio * lhs;
  }
  out.report.params["quantum_driving"] = out.quantum_driving ? 1.0 : 0.0;
  return out;
}

FdrRecord fdr_check(const HermitianOperator& h, const HermitianOperator& delta_h, double beta) {
  if (h.dim() != delta_h.dim()) throw DimensionMismatch("fdr_check: dimension mismatch");
  const auto rho = gibbs_state(h, beta);
  const auto rho_p = gibbs_state(h + delta_h, beta);
  const auto e = eig_hermitian(rho.op());
  const auto ep = eig_hermitian(rho_p.op());
  if (e.values(0) <= kEigFloor || ep.values(0) <= kEigFloor)
    throw RequiresFullRank("fdr_check: Gibbs state is numerically rank deficient");

  const auto log_rho_p = matrix_function(rho_p.op(), [](double x) { return std::log(x); });
  const auto log_rho = matrix_function(rho.op(), [](double x) { return std::log(x); });
  // beta W_diss = S(rho || rho') = tr[rho (ln rho - ln rho')]
  const double relative_entropy =
      trace_product_real(rho.matrix(), log_rho.matrix()) - trace_product_real(rho.matrix(), log_rho_p.matrix());

  FdrRecord r{};
  r.var_w = variance(rho, delta_h);
  r.w_diss_exact = beta > 0.0 ? relative_entropy / beta : 0.0;
  r.kubo_mori_half_beta = 0.5 * beta * kubo_mori_variance(rho, delta_h);
  r.q_w = 0.5 * beta * ibar(rho, delta_h);
  r.residual = 0.5 * beta * r.var_w - r.w_diss_exact - r.q_w;
  return r;
}

LinearResponseReport linear_response_bounds(const Generator& free, const DensityMatrix& pi, const HermitianOperator& a,
                                            const HermitianOperator& v_op, const Schedule& v_schedule,
                                            const IntegratorConfig& cfg, double epsilon) {
  if (!v_schedule) throw InvalidArgument("linear_response_bounds: empty schedule");
  const double residual = free.apply(pi.matrix()).cwiseAbs().maxCoeff();
  if (residual > 1e-8) {
    std::ostringstream os;
    os << "linear_response_bounds: reference state is not stationary (residual " << residual << ")";
    throw NotStationary(os.str());
  }
  const auto v_gen = Generator::hamiltonian(v_op);
  const auto traj = integrate(free + Generator::scaled(v_schedule, v_gen), pi, cfg);
  const double f = qfi(pi, v_gen);
  const double norm_a = operator_norm(a.matrix());
  const double norm_v = operator_norm(v_op.matrix());
  const double mean = expectation(pi, a);

  std::vector<double> abs_v;
  double v_max = 0.0;
  for (double t : cfg.output_times) {
    abs_v.push_back(std::abs(v_schedule(t)));
    v_max = std::max(v_max, abs_v.back());
  }
  const auto int_v = cumulative_trapezoid(cfg.output_times, abs_v);

  LinearResponseReport out;
  out.norm_bound.name = "linear_response_norm";
  out.fluctuation_bound.name = "linear_response_fluctuation";
  const double c1 = norm_a * std::sqrt(f);
  const double c2 = std::sqrt(variance(pi, a) * f);
  for (auto* r : {&out.norm_bound, &out.fluctuation_bound}) {
    add_integrator_params(*r, cfg);
    r->params["epsilon"] = epsilon;
    r->params["v_max"] = v_max;
    r->params["qfi"] = f;
  }
  for (size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    const double delta_a = std::abs(expectation(traj.states[i], a) - mean);
    const double bracket = int_v[i] + delta_est(t, v_max, norm_v, epsilon);
    out.norm_bound.push(t, delta_a, c1 * bracket);
    out.fluctuation_bound.push(t, delta_a, c2 * bracket);
  }
  return out;
}

UhlmannReport uhlmann_regression(const HermitianOperator& h, const Schedule& schedule, const DensityMatrix& rho0,
                                 const IntegratorConfig& cfg) {
  const auto base = Generator::hamiltonian(h);
  const Generator g = schedule ? Generator::scaled(schedule, base) : base;
  const auto traj = integrate(g, rho0, cfg);
  const auto speed = sqrt_qfi_along(traj, g);
  const auto integral = cumulative_trapezoid(traj.times, speed);

  UhlmannReport out;
  out.report.name = "uhlmann";
  add_integrator_params(out.report, cfg);
  for (size_t i = 0; i < traj.size(); ++i) {
    const double f = fidelity(rho0, traj.states[i]);
    out.report.push(traj.times[i], std::acos(f), 0.5 * integral[i]);
    if (!out.orthogonality_time && f <= 1e-6) out.orthogonality_time = traj.times[i];
  }
  const bool pure = eig_hermitian(rho0.op()).values(rho0.dim() - 1) >= 1.0 - 1e-9;
  if (pure && !schedule) {
    const double var = variance(rho0, h);
    out.mandelstam_tamm_time =
        var > 0.0 ? std::numbers::pi / (2.0 * std::sqrt(var)) : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace qsl
