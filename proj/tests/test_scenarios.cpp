#include <algorithm>

#include "helpers.hpp"
#include "qsl/errors.hpp"
#include "qsl/scenarios.hpp"
#include "qsl/speed_limits.hpp"

using namespace testing;

TEST_CASE("two-qubit dephasing defaults") {
  auto s = two_qubit_dephasing();
  CHECK(s.problem.dim() == 4);
  CHECK(s.problem.epsilon_sampled <= 0.004 + 1e-9);
  CHECK(s.problem.epsilon_upper / 0.004 <= 4.0);
  CHECK(0.004 / s.problem.epsilon_upper <= 4.0);
  CHECK(s.problem.timescales.all());
  CHECK(s.threshold == 2.0);
  CHECK(s.measurement->size() == 4);
  CHECK(s.h_int == doctest::Approx(0.005));
}

TEST_CASE("two-qubit model without a bath is closed") {
  auto s = two_qubit_dephasing(1.0, 0.0, 0.1, 0.1);
  HermitianOperator h(0.5 * (z1() + z2()));
  Rng rng(80);
  Matrix x = random_ginibre(4, 4, rng);
  CHECK(max_abs(s.problem.free.apply(x) - Generator::hamiltonian(h).apply(x)) < 1e-14);
  CHECK(s.problem.epsilon_upper == doctest::Approx(0.0));
}

TEST_CASE("bell coherence decays under pure dephasing") {
  const double lambda = 0.1, gamma0 = 0.1;
  auto s = two_qubit_dephasing(1.0, lambda, gamma0, 0.0);
  auto traj = integrate(s.problem.free, s.rho0, s.config());
  for (size_t k = 0; k < traj.size(); k += 40) {
    const double expected = 0.5 * std::exp(-4.0 * lambda * lambda * gamma0 * traj.times[k]);
    REQUIRE(std::abs(traj.states[k].matrix()(0, 3)) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("witness table reproduces the reported crossings") {
  auto s = two_qubit_dephasing();
  auto table = fig2_run(s, s.config());
  REQUIRE(table.rows.size() == 400);
  CHECK(table.rows.front().exact_avg_sqrt_qfi == doctest::Approx(2.0).epsilon(0.005));
  REQUIRE(table.exact_crossing.has_value());
  REQUIRE(table.corrected_crossing.has_value());
  CHECK(std::abs(*table.exact_crossing - 1.41) <= 0.02);
  CHECK(std::abs(*table.corrected_crossing - 1.26) <= 0.02);
  for (const auto& r : table.rows) {
    REQUIRE(r.t > 0.0);
    REQUIRE(r.threshold == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("short-time measured speed matches the exact speed" * doctest::may_fail()) {
  auto s = two_qubit_dephasing();
  auto table = fig2_run(s, s.config());
  const auto& first = table.rows.front();
  CHECK(std::abs(first.measured_speed - first.exact_avg_sqrt_qfi) <= 0.01 * first.exact_avg_sqrt_qfi);
}

TEST_CASE("finite-shot witness is seeded") {
  auto s = two_qubit_dephasing();
  auto cfg = make_config(1.0, 50, s.h_int);
  auto a = fig2_run(s, cfg, 10000, 3);
  auto b = fig2_run(s, cfg, 10000, 3);
  auto exact = fig2_run(s, cfg);
  bool differs = false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].measured_speed == b.rows[i].measured_speed);
    differs = differs || a.rows[i].measured_speed != exact.rows[i].measured_speed;
  }
  CHECK(differs);
}

TEST_CASE("error budget table") {
  auto s = two_qubit_dephasing();
  auto run = run_weak_coupling(s.problem, s.rho0, s.config());
  auto rows = fig3_table(s, run);
  REQUIRE(rows.size() == 401);
  CHECK(rows.front().t == 0.0);
  CHECK(rows.front().delta1_plus_delta2 == doctest::Approx(0.0));
  CHECK(rows.front().delta_est == 0.0);
  for (const auto& r : rows) {
    REQUIRE(r.delta2 >= r.delta1);
    REQUIRE(r.delta1_plus_delta2 == doctest::Approx(r.delta1 + r.delta2));
  }
}

TEST_CASE("error budget stays below the estimate" * doctest::may_fail()) {
  auto s = two_qubit_dephasing();
  auto rows = fig3_run(s, s.config());
  const auto above = std::count_if(rows.begin(), rows.end(),
                                   [](const Fig3Row& r) { return r.delta1_plus_delta2 > r.delta_est; });
  CHECK(above == 0);
}

TEST_CASE("figure tables are deterministic") {
  auto s = two_qubit_dephasing();
  auto a = fig2_run(s, s.config());
  auto b = fig2_run(two_qubit_dephasing(), s.config());
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].measured_speed == b.rows[i].measured_speed);
    REQUIRE(a.rows[i].exact_avg_sqrt_qfi == b.rows[i].exact_avg_sqrt_qfi);
    REQUIRE(a.rows[i].corrected_lower_bound == b.rows[i].corrected_lower_bound);
  }
}

TEST_CASE("crossing detection") {
  std::vector<double> t{0, 1, 2, 3}, y{3, 2, 1, 0};
  CHECK(*first_crossing_below(t, y, 1.5) == doctest::Approx(1.5));
  CHECK_FALSE(first_crossing_below(t, y, 5.0).has_value());
  CHECK_FALSE(first_crossing_below(t, y, -1.0).has_value());
}

TEST_CASE("quench scenarios") {
  HermitianOperator h(0.5 * pauli_z());
  std::vector<HermitianOperator> z{HermitianOperator(pauli_z())};
  auto bath = ohmic_gamma(0.05, 20.0, 1.0);

  auto still = quench_scenario(h, HermitianOperator::zero(2), 1.0, z, 0.1, bath);
  CHECK(still.ibar == 0.0);
  CHECK(max_abs(still.h_prime.matrix() - h.matrix()) == 0.0);
  CHECK_FALSE(still.quantum_driving);

  auto commuting = quench_scenario(h, HermitianOperator(0.05 * pauli_z()), 1.0, z, 0.1, bath);
  CHECK(commuting.classical_driving);
  CHECK_FALSE(commuting.quantum_driving);

  auto coherent = quench_scenario(h, HermitianOperator(0.05 * pauli_x()), 1.0, z, 0.02, bath);
  CHECK_FALSE(coherent.classical_driving);
  CHECK(coherent.quantum_driving);

  std::vector<HermitianOperator> x{HermitianOperator(pauli_x())};
  CHECK_THROWS_AS(quench_scenario(h, HermitianOperator(0.05 * pauli_x()), 1.0, x, 0.1, flat_spectrum(0.1)),
                  NotStationary);
}

TEST_CASE("random instances") {
  auto a = random_instance(3, 1);
  auto b = random_instance(3, 1);
  CHECK(a.h.matrix() == b.h.matrix());
  CHECK(a.v_op.matrix() == b.v_op.matrix());
  CHECK(a.v == b.v);
  CHECK(a.rho0.matrix() == b.rho0.matrix());
  CHECK(a.observable.matrix() == b.observable.matrix());
  REQUIRE(a.terms.size() == b.terms.size());
  for (size_t k = 0; k < a.terms.size(); ++k) {
    CHECK(a.terms[k].jump == b.terms[k].jump);
    CHECK(a.terms[k].rate == b.terms[k].rate);
    CHECK(a.terms[k].rate >= 0.0);
    CHECK(a.terms[k].rate <= 1.0);
  }
  CHECK(a.v <= 0.2);
  CHECK(operator_norm(a.observable.matrix()) <= 1.0 + 1e-12);
  CHECK(eig_hermitian(a.rho0.op()).values(0) > 0.0);
  CHECK_THROWS_AS(random_instance(9, 1), InvalidArgument);
  CHECK(random_instance(3, 2).h.matrix() != a.h.matrix());
}

TEST_CASE("random instances satisfy the state-distance bound") {
  auto cfg = make_config(2.0, 100, 0.02);
  for (int i = 0; i < 100; ++i) {
    auto inst = random_instance(2 + i % 3, 1000 + static_cast<std::uint64_t>(i));
    REQUIRE(result1_bound(inst.free, inst.pert, inst.rho0, cfg).holds());
  }
}
