#include "helpers.hpp"
#include "qsl/errors.hpp"
#include "qsl/scenarios.hpp"
#include "qsl/weak_coupling.hpp"

using namespace testing;

namespace {

WeakCouplingModel dephasing_qubit(double h, double lambda, double gamma0) {
  return {HermitianOperator(0.5 * h * pauli_z()), {HermitianOperator(pauli_z())}, lambda, flat_spectrum(gamma0)};
}

// Probe basis |i><j| for trace and consistency checks.
std::vector<Matrix> probes(Index d) {
  std::vector<Matrix> out;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      Matrix m = Matrix::Zero(d, d);
      m(i, j) = 1.0;
      out.push_back(m);
    }
  return out;
}

double probe_distance(const Generator& a, const Generator& b, Index d) {
  double worst = 0.0;
  for (const auto& p : probes(d)) worst = std::max(worst, max_abs(a.apply(p) - b.apply(p)));
  return worst;
}

}  // namespace

TEST_CASE("bohr decomposition of a qubit coupling") {
  const double h = 1.3;
  HermitianOperator hq(0.5 * h * pauli_z());
  auto parts = bohr_decompose(hq, HermitianOperator(pauli_x()), 0.0);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].omega == doctest::Approx(-h));
  CHECK(parts[1].omega == doctest::Approx(h));
  // |0> carries energy +h/2 under sigma_z / 2.
  CHECK(max_abs(parts[1].op - ket_bra(ket({1, 0})) * pauli_x() * ket_bra(ket({0, 1}))) < 1e-14);
  CHECK(max_abs(parts[0].op - ket_bra(ket({0, 1})) * pauli_x() * ket_bra(ket({1, 0}))) < 1e-14);

  auto z = bohr_decompose(hq, HermitianOperator(pauli_z()), 0.0);
  REQUIRE(z.size() == 1);
  CHECK(z[0].omega == doctest::Approx(0.0));
  CHECK(max_abs(z[0].op - pauli_z()) < 1e-14);
}

TEST_CASE("commuting coupling on a nondegenerate two-qubit hamiltonian") {
  HermitianOperator h(0.5 * (z1() + 1.7 * z2()));
  auto parts = bohr_decompose(h, HermitianOperator(z1()), 0.0);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].omega == doctest::Approx(0.0));
  CHECK(max_abs(parts[0].op - z1()) < 1e-14);
}

TEST_CASE("bohr clustering") {
  CHECK_THROWS_AS(bohr_structure(HermitianOperator(diag({0, 1, 1})), 0.0), InvalidArgument);
  const double tol = 1e-3;
  CHECK_THROWS_AS(bohr_structure(HermitianOperator(diag({0, 1, 2 + 0.6 * tol, 3 + 1.8 * tol})), tol),
                  AmbiguousClustering);
  auto s = bohr_structure(HermitianOperator(diag({0, 1, 2})), 0.0);
  CHECK(s.clusters.size() == 5);
}

TEST_CASE("bohr components are complete eigenoperators") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto inst = random_weak_coupling(2 + seed % 3, seed);
    const auto me = build_secular_me(inst.model);
    for (size_t a = 0; a < inst.model.couplings.size(); ++a) {
      Matrix sum = Matrix::Zero(inst.model.h.dim(), inst.model.h.dim());
      for (size_t c = 0; c < me.bohr.clusters.size(); ++c) {
        const Matrix& comp = me.components[c][a];
        sum += comp;
        const double w = me.bohr.clusters[c].omega;
        REQUIRE(max_abs(commutator(inst.model.h.matrix(), comp) - w * comp) <= 1e-8 * std::max(1.0, std::abs(w)));
      }
      REQUIRE(max_abs(sum - inst.model.couplings[a].matrix()) <= 1e-10);
    }
    for (const auto& p : probes(inst.model.h.dim())) REQUIRE(std::abs(trace(me.generator.apply(p))) <= 1e-10);
  }
}

TEST_CASE("secular master equation of local dephasing") {
  const double lambda = 0.1, gamma0 = 0.1;
  auto s = two_qubit_dephasing(1.0, lambda, gamma0, 0.1);
  Rng rng(60);
  auto rho = random_density_matrix(4, rng).matrix();
  HermitianOperator h(0.5 * (z1() + z2()));
  Matrix expected = Generator::hamiltonian(h).apply(rho) +
                    lambda * lambda * gamma0 * (z1() * rho * z1() + z2() * rho * z2() - 2.0 * rho);
  CHECK(max_abs(s.problem.free.apply(rho) - expected) < 1e-14);

  auto me = build_secular_me(dephasing_qubit(1.0, lambda, gamma0));
  CHECK(max_abs(me.h_ls.matrix()) < 1e-15);

  auto closed = build_secular_me(dephasing_qubit(1.0, 0.0, gamma0));
  CHECK(probe_distance(closed.generator, Generator::hamiltonian(HermitianOperator(0.5 * pauli_z())), 2) < 1e-15);
}

TEST_CASE("first-order eigensystem perturbation") {
  const double h = 1.0;
  auto p = perturb_eigensystem(HermitianOperator(0.5 * h * pauli_z()), HermitianOperator(0.5 * pauli_x()));
  CHECK(std::abs(p.e1(0)) < 1e-15);
  CHECK(std::abs(p.e1(1)) < 1e-15);
  CHECK(std::abs(p.c(0, 1)) == doctest::Approx(1.0 / (2.0 * h)));
  CHECK(std::abs(p.c(1, 0)) == doctest::Approx(1.0 / (2.0 * h)));

  HermitianOperator hd(diag({0, 1, 3}));
  HermitianOperator vd(diag({0.4, -0.2, 0.7}));
  auto q = perturb_eigensystem(hd, vd);
  CHECK(max_abs(q.c) == 0.0);
  for (const auto& qn : q.q) CHECK(max_abs(qn) < 1e-15);
  CHECK(q.e1(0) == doctest::Approx(0.4));
  CHECK(q.e1(1) == doctest::Approx(-0.2));
  CHECK(q.e1(2) == doctest::Approx(0.7));
}

TEST_CASE("first-order dissipator of a dephasing qubit") {
  const double h = 1.0, lambda = 0.1, gamma0 = 0.1;
  auto model = dephasing_qubit(h, lambda, gamma0);
  auto me = build_secular_me(model);
  auto pert = perturb_eigensystem(model.h, HermitianOperator(0.5 * pauli_x()));
  auto ex = first_order_generators(model, me, pert);
  CHECK(max_abs(ex.h1_ls.matrix()) < 1e-15);
  Rng rng(61);
  const double scale = lambda * lambda * gamma0 / h;
  for (int i = 0; i < 10; ++i) {
    Matrix rho = random_density_matrix(2, rng).matrix();
    Matrix expected = scale * (pauli_z() * rho * pauli_x() + pauli_x() * rho * pauli_z());
    REQUIRE(max_abs(ex.d1.apply(rho) - expected) < 1e-14);
  }
  CHECK(ex.epsilon_sampled <= 2.0 * scale + 1e-9);
  CHECK(ex.epsilon_sampled <= ex.epsilon_upper);

  auto commuting = first_order_generators(model, me, perturb_eigensystem(model.h, HermitianOperator(pauli_z())));
  for (const auto& row : commuting.a1)
    for (const auto& m : row) CHECK(max_abs(m) < 1e-15);
}

TEST_CASE("error parameter") {
  auto e0 = epsilon(Generator::zero(3), 100, 1);
  CHECK(e0.sampled == 0.0);
  CHECK(e0.upper == 0.0);

  auto s = two_qubit_dephasing();
  CHECK(s.problem.epsilon_sampled <= 0.004 + 1e-9);
  CHECK(s.problem.epsilon_upper >= 0.001);
  CHECK(s.problem.epsilon_upper <= 0.016);

  double prev = 0.0;
  for (int n : {10, 100, 1000, 3000}) {
    auto e = epsilon(s.problem.correction, n, 5);
    CHECK(e.sampled >= prev);
    CHECK(e.sampled <= e.upper);
    prev = e.sampled;
  }
}

TEST_CASE("degeneracy breaking") {
  auto site = dephasing_qubit(1.0, 0.1, 0.1);
  auto me = build_secular_me(site);
  CHECK_FALSE(degeneracy_break_check(me, perturb_eigensystem(site.h, HermitianOperator(0.5 * pauli_x()))).broken);
  CHECK_FALSE(degeneracy_break_check(me, perturb_eigensystem(site.h, HermitianOperator::zero(2))).broken);

  Matrix ladder = Matrix::Zero(3, 3);
  ladder(0, 1) = ladder(1, 0) = ladder(1, 2) = ladder(2, 1) = 1.0;
  WeakCouplingModel three{HermitianOperator(diag({0, 1, 2})), {HermitianOperator(ladder)}, 0.1, flat_spectrum(0.1)};
  HermitianOperator middle(diag({0, 1, 0}));
  auto me3 = build_secular_me(three);
  auto report = degeneracy_break_check(me3, perturb_eigensystem(three.h, middle));
  CHECK(report.broken);
  CHECK_FALSE(report.advisory.empty());
  CHECK_THROWS_AS(make_perturbed_problem(three, middle, 0.01), DegeneracyBroken);
  CHECK_FALSE(degeneracy_break_check(me3, perturb_eigensystem(three.h, HermitianOperator::zero(3))).broken);
}

TEST_CASE("timescales") {
  auto ts = timescales(dephasing_qubit(1.0, 0.1, 0.1), 0.1);
  CHECK(ts.tau_S == doctest::Approx(1.0));
  CHECK(ts.tau_V == doctest::Approx(10.0));
  CHECK(ts.tau_R == doctest::Approx(1000.0));
  CHECK(ts.rotating_wave);
  CHECK(ts.weak_vs_system);

  auto still = timescales(dephasing_qubit(1.0, 0.1, 0.1), 0.0);
  CHECK(std::isinf(still.tau_V));
  CHECK(still.weak_vs_bath);
  CHECK(still.weak_vs_system);

  auto closed = timescales(dephasing_qubit(1.0, 0.0, 0.1), 0.1);
  CHECK(std::isinf(closed.tau_R));
  CHECK(closed.born_markov);
  CHECK(closed.rotating_wave);
}

TEST_CASE("ohmic spectral density") {
  const double eta = 0.05, wc = 20.0, beta = 1.5;
  auto bath = ohmic_gamma(eta, wc, beta);
  const double pi = std::acos(-1.0);
  const double g0 = 2.0 * pi * eta / beta;
  CHECK(bath.gamma(0, 0, 0.0) == doctest::Approx(g0).epsilon(1e-14));
  const double w = 1e-6;
  CHECK(std::abs(bath.gamma(0, 0, w) - g0 * (1.0 + w * (beta / 2.0 - 1.0 / wc))) < 1e-8);
  for (double x : {0.3, 1.0, 2.5}) CHECK(bath.gamma(0, 0, x) / bath.gamma(0, 0, -x) == doctest::Approx(std::exp(beta * x)));
  auto flat_cut = ohmic_gamma(eta, 1e6, beta);
  CHECK(flat_cut.gamma_deriv(0, 0, 1e-6) == doctest::Approx(pi * eta).epsilon(1e-4));
  CHECK(bath.gamma(0, 1, 1.0) == 0.0);
  for (double x : {-2.0, -1e-4, 0.0, 1e-4, 0.7}) {
    const double step = 1e-6;
    const double fd = (bath.gamma(0, 0, x + step) - bath.gamma(0, 0, x - step)) / (2.0 * step);
    CHECK(bath.gamma_deriv(0, 0, x) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK_THROWS_AS(ohmic_gamma(-1.0, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("first-order generator matches the rebuilt generator to second order") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = random_weak_coupling(2 + seed % 3, seed);
    const Index d = inst.model.h.dim();
    const double v = 0.01;
    auto residual = [&](double vv) {
      auto p = make_perturbed_problem(inst.model, inst.v_op, vv);
      return probe_distance(p.exact_perturbed, p.first_order_perturbed(), d);
    };
    const double r1 = residual(v), r2 = residual(v / 2);
    REQUIRE(r1 > 0.0);
    REQUIRE(std::log2(r1 / r2) >= 1.9);
  }
}

TEST_CASE("random weak-coupling models satisfy the regime assumptions") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = random_weak_coupling(2 + seed % 3, seed);
    auto p = make_perturbed_problem(inst.model, inst.v_op, inst.v);
    CHECK(p.timescales.all());
    CHECK(p.epsilon_sampled <= p.epsilon_upper);
  }
}

TEST_CASE("thermal baths leave the gibbs state stationary") {
  HermitianOperator h(0.5 * pauli_z());
  WeakCouplingModel qubit{h, {HermitianOperator(pauli_x())}, 0.1, ohmic_gamma(0.05, 20.0, 1.0)};
  auto me = build_secular_me(qubit);
  auto g = gibbs_state(h, 1.0);
  CHECK(max_abs(me.generator.apply(g.matrix())) < 1e-14);
  auto late = integrate(me.generator, pure({1, 0}), make_config(3000.0, 1, 0.5)).states.back();
  CHECK(late.matrix()(1, 1).real() == doctest::Approx(g.matrix()(1, 1).real()).epsilon(1e-6));

  Rng rng(90);
  for (int i = 0; i < 20; ++i) {
    const Index d = 2 + i % 3;
    auto hr = random_hermitian(d, rng);
    WeakCouplingModel m{hr, {random_hermitian(d, rng), random_hermitian(d, rng)}, 0.1, ohmic_gamma(0.05, 20.0, 0.7)};
    auto gen = build_secular_me(m).generator;
    REQUIRE(max_abs(gen.apply(gibbs_state(hr, 0.7).matrix())) < 1e-12);
  }
}
