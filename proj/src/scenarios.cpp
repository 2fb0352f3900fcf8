#include "qsl/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsl/random.hpp"

namespace qsl {

IntegratorConfig Scenario::config() const { return make_config(t_max, intervals, h_int); }

double default_step(const TimescaleReport& ts) { return std::min({ts.tau_S, ts.tau_V, ts.tau_R}) / 200.0; }

Scenario two_qubit_dephasing(double h, double lambda, double gamma0, double v, const ProblemOptions& opts) {
  if (!(h > 0.0) || !(lambda >= 0.0) || !(gamma0 >= 0.0) || !(v >= 0.0))
    throw InvalidArgument("two_qubit_dephasing: parameters must be nonnegative and h > 0");
  WeakCouplingModel site{HermitianOperator(0.5 * h * pauli_z()), {HermitianOperator(pauli_z())}, lambda,
                         flat_spectrum(gamma0)};
  const auto single = make_perturbed_problem(site, HermitianOperator(0.5 * pauli_x()), v, opts);
  auto problem = combine_local({single, single}, opts);

  Scenario s{"two_qubit_dephasing",
             std::move(problem),
             DensityMatrix(bell_state(0)),
             bell_measurement(),
             2.0,
             2.0,
             400,
             0.0};
  s.h_int = std::min(default_step(s.problem.timescales), s.t_max / s.intervals);
  return s;
}

std::optional<double> first_crossing_below(const std::vector<double>& t, const std::vector<double>& y, double level) {
  if (t.size() != y.size()) throw DimensionMismatch("first_crossing_below: length mismatch");
  for (size_t i = 1; i < t.size(); ++i) {
    if (y[i - 1] > level && y[i] <= level) return t[i - 1] + (y[i - 1] - level) / (y[i - 1] - y[i]) * (t[i] - t[i - 1]);
  }
  return std::nullopt;
}

namespace {

ProbDist sample_frequencies(const ProbDist& p, int shots, Rng& rng) {
  std::vector<double> freq(p.size(), 0.0);
  int remaining = shots;
  double mass = 1.0;
  for (size_t i = 0; i < p.size() && remaining > 0; ++i) {
    const double q = i + 1 == p.size() || mass <= 0.0 ? 1.0 : std::clamp(p[i] / mass, 0.0, 1.0);
    std::binomial_distribution<int> bin(remaining, q);
    const int k = bin(rng);
    freq[i] = static_cast<double>(k) / shots;
    remaining -= k;
    mass -= p[i];
  }
  return ProbDist(std::move(freq));
}

}  // namespace

Fig2Table fig2_table(const Scenario& s, const WeakCouplingRun& run, int shots, std::uint64_t seed) {
  if (!s.measurement || !s.threshold) throw InvalidArgument("fig2: scenario needs a measurement and a threshold");
  if (shots < 0) throw InvalidArgument("fig2: shots must be >= 0");
  const double v = s.problem.v;
  const double eps = s.problem.epsilon_upper;
  const double level = std::sqrt(*s.threshold);
  const auto& times = run.rho.times;
  const auto integral = cumulative_trapezoid(times, run.sqrt_qfi_eta);
  Rng rng(seed);

  Fig2Table table;
  table.epsilon = eps;
  std::vector<double> ts, exact, measured, corrected;
  for (size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!(t > 0.0)) continue;
    auto p = measure(run.rho.states[i], *s.measurement);
    auto q = measure(run.eta.states[i], *s.measurement);
    if (shots > 0) {
      p = sample_frequencies(p, shots, rng);
      q = sample_frequencies(q, shots, rng);
    }
    const double speed = witness_statistic(p, q, t, v);
    const double bound = speed - 2.0 * delta_est(t, v, s.problem.norm_v, eps) / (v * t);
    table.rows.push_back({t, speed, integral[i] / t, bound, level});
    ts.push_back(t);
    exact.push_back(integral[i] / t);
    measured.push_back(speed);
    corrected.push_back(bound);
  }
  table.exact_crossing = first_crossing_below(ts, exact, level);
  table.measured_crossing = first_crossing_below(ts, measured, level);
  table.corrected_crossing = first_crossing_below(ts, corrected, level);
  return table;
}

Fig2Table fig2_run(const Scenario& s, const IntegratorConfig& cfg, int shots, std::uint64_t seed,
                   PerturbedDynamics dynamics) {
  return fig2_table(s, run_weak_coupling(s.problem, s.rho0, cfg, dynamics), shots, seed);
}

std::vector<Fig3Row> fig3_table(const Scenario& s, const WeakCouplingRun& run) {
  const auto r3 = result3_bound(run, s.problem);
  const auto& b = r3.budget;
  std::vector<Fig3Row> rows;
  for (size_t i = 0; i < b.times.size(); ++i)
    rows.push_back({b.times[i], b.delta1[i], b.delta2[i], b.delta1[i] + b.delta2[i], b.delta_est[i]});
  return rows;
}

std::vector<Fig3Row> fig3_run(const Scenario& s, const IntegratorConfig& cfg, PerturbedDynamics dynamics) {
  return fig3_table(s, run_weak_coupling(s.problem, s.rho0, cfg, dynamics));
}

QuenchScenario quench_scenario(const HermitianOperator& h, const HermitianOperator& delta_h, double beta,
                               const std::vector<HermitianOperator>& couplings, double lambda,
                               const BathSpectrum& bath, double t_max, const ProblemOptions& opts) {
  if (delta_h.dim() != h.dim()) throw DimensionMismatch("quench_scenario: dimension mismatch");
  WeakCouplingModel model{h, couplings, lambda, bath};
  const auto rho_th = gibbs_state(h, beta);
  const auto me = build_secular_me(model, opts.tol_omega);
  const double residual = me.generator.apply(rho_th.matrix()).cwiseAbs().maxCoeff();
  if (residual > 1e-6) {
    std::ostringstream os;
    os << "quench_scenario: Gibbs state is not stationary (residual " << residual << ")";
    throw NotStationary(os.str());
  }
  const double ib = ibar(rho_th, delta_h);
  QuenchScenario q{model, h + delta_h, beta, ib, ib <= 1e-12, false};
  const double v = operator_norm(delta_h.matrix());
  if (v > 0.0) {
    WeakCouplingModel after = model;
    after.h = q.h_prime;
    const auto problem = make_perturbed_problem(after, (-1.0 / v) * delta_h, v, opts);
    const double eps = problem.epsilon_upper;
    const double rhs = std::max(std::sqrt(eps * v * t_max), eps);
    const double lhs = std::sqrt(ib) / v;
    q.quantum_driving = !q.classical_driving && rhs <= kTimescaleRatio * lhs;
  }
  return q;
}

RandomInstance random_instance(Index dim, std::uint64_t seed, double rate_cap, double v_cap) {
  if (dim < 2 || dim > 8) throw InvalidArgument("random_instance: dim must lie in [2, 8]");
  if (!(rate_cap >= 0.0) || !(v_cap > 0.0)) throw InvalidArgument("random_instance: caps must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto h = random_hermitian(dim, rng, 1.0);
  std::vector<LindbladTerm> terms;
  for (Index k = 0; k < dim; ++k) {
    Matrix l = random_ginibre(dim, dim, rng);
    l /= operator_norm(l);
    terms.push_back({std::move(l), rate_cap * unit(rng)});
  }
  const auto v_op = random_hermitian(dim, rng, 1.0);
  const double v = v_cap * (1.0 - unit(rng));
  const auto rho0 = random_density_matrix(dim, rng);
  const auto observable = random_hermitian(dim, rng, 1.0 - unit(rng));
  auto free = Generator::gksl(h, terms);
  auto pert = Generator::scaled(v, Generator::hamiltonian(v_op));
  return {dim, h, std::move(terms), std::move(free), v_op, v, std::move(pert), rho0, observable};
}

RandomWeakCoupling random_weak_coupling(Index dim, std::uint64_t seed) {
  if (dim < 2 || dim > 8) throw InvalidArgument("random_weak_coupling: dim must lie in [2, 8]");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Spacings in [1, 2] keep tau_S <= 1; distinct draws avoid Bohr degeneracies.
  RealVector levels(dim);
  levels(0) = 0.0;
  for (Index i = 1; i < dim; ++i) levels(i) = levels(i - 1) + 1.0 + unit(rng);
  const Matrix u = random_unitary(dim, rng);
  const HermitianOperator h = HermitianOperator::hermitian_part(u * levels.cast<Complex>().asDiagonal() * u.adjoint());
  const auto coupling = random_hermitian(dim, rng, 1.0);
  const auto v_op = random_hermitian(dim, rng, 1.0);
  const double v = 0.005 + 0.01 * unit(rng);
  const double beta = 0.5 + unit(rng);
  const auto rho0 = random_density_matrix(dim, rng);
  WeakCouplingModel model{h, {coupling}, 0.1, ohmic_gamma(0.05, 20.0, beta)};
  return {std::move(model), v_op, v, rho0};
}

}  // namespace qsl
