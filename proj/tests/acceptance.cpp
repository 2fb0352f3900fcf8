// Acceptance checks. With no argument every criterion runs; with an argument
// N only criterion N runs. Exit status is nonzero if any selected check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "qsl/cli.hpp"
#include "qsl/random.hpp"
#include "qsl/scenarios.hpp"

using namespace qsl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict fig2_crossings() {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = two_qubit_dephasing(1.0, 0.1, 0.1, 0.1);
  auto table = fig2_run(s, s.config());
  const double secs = seconds_since(t0);
  const double exact = table.exact_crossing.value_or(NAN);
  const double corrected = table.corrected_crossing.value_or(NAN);
  const bool ok = std::abs(exact - 1.41) <= 0.02 && std::abs(corrected - 1.26) <= 0.02 && secs < 10.0;
  return {ok, fmt("exact crossing %.5f (1.41 +- 0.02), corrected crossing %.5f (1.26 +- 0.02), %.2f s", exact,
                  corrected, secs)};
}

Verdict fig3_budget() {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = two_qubit_dephasing(1.0, 0.1, 0.1, 0.1);
  auto rows = fig3_run(s, s.config());
  const double secs = seconds_since(t0);
  int over = 0, inverted = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    if (r.delta1_plus_delta2 > r.delta_est) {
      ++over;
      worst = std::max(worst, r.delta1_plus_delta2 - r.delta_est);
    }
    if (r.delta2 < r.delta1) ++inverted;
  }
  const bool ok = over == 0 && inverted == 0 && secs < 10.0;
  return {ok, fmt("%d/%zu points with D1+D2 > D_est (worst excess %.3g), %d points with D2 < D1, %.2f s", over,
                  rows.size(), worst, inverted, secs)};
}

Verdict epsilon_consistency() {
  auto s = two_qubit_dephasing(1.0, 0.1, 0.1, 0.1);
  const double sampled = s.problem.epsilon_sampled, upper = s.problem.epsilon_upper;
  const bool ok = sampled <= 0.004 + 1e-9 && upper <= 4.0 * 0.004 && upper >= 0.004 / 4.0;
  return {ok, fmt("epsilon_sampled %.6g, epsilon_upper %.6g", sampled, upper)};
}

Verdict random_suite(bool observable) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = make_config(2.0, 100, 0.02);
  double worst = INFINITY;
  int failed = 0;
  for (int i = 0; i < 100; ++i) {
    auto inst = random_instance(2 + i % 3, 1 + static_cast<std::uint64_t>(i));
    auto r = observable ? result2_bound(inst.free, inst.pert, inst.observable, inst.rho0, cfg)
                        : result1_bound(inst.free, inst.pert, inst.rho0, cfg);
    worst = std::min(worst, r.min_margin());
    if (!r.holds(1e-6)) ++failed;
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && secs < 60.0, fmt("100 instances, %d below -1e-6, min margin %.3g, %.2f s", failed, worst, secs)};
}

Verdict exact_error_form() {
  std::vector<Scenario> scenarios;
  scenarios.push_back(two_qubit_dephasing());
  {
    WeakCouplingModel m{HermitianOperator(0.5 * pauli_z()), {HermitianOperator(pauli_z())}, 0.1, flat_spectrum(0.1)};
    auto p = make_perturbed_problem(m, HermitianOperator(0.5 * pauli_x()), 0.05);
    Scenario s{"dephasing_qubit", std::move(p), DensityMatrix::maximally_mixed(2), std::nullopt, std::nullopt};
    s.h_int = default_step(s.problem.timescales);
    scenarios.push_back(std::move(s));
  }
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto inst = random_weak_coupling(2 + seed % 3, seed);
    auto p = make_perturbed_problem(inst.model, inst.v_op, inst.v);
    Scenario s{"random_weak_coupling", std::move(p), inst.rho0, std::nullopt, std::nullopt};
    s.h_int = default_step(s.problem.timescales);
    scenarios.push_back(std::move(s));
  }
  int checked = 0, skipped = 0, failed = 0;
  double worst = INFINITY;
  for (const auto& s : scenarios) {
    if (!s.problem.timescales.all()) {
      ++skipped;
      continue;
    }
    ++checked;
    auto r = result3_bound(s.problem, s.rho0, s.config());
    worst = std::min(worst, r.exact_error.min_margin());
    if (!r.exact_error.holds(1e-6)) ++failed;
  }
  return {failed == 0 && checked > 0,
          fmt("%d scenarios checked, %d outside the regime, %d failing, min margin %.3g", checked, skipped, failed, worst)};
}

Verdict sandwich() {
  Rng rng(7);
  int bad_sandwich = 0, bad_quadrature = 0;
  double worst_rel = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Index d = 2 + i % 3;
    auto rho = random_density_matrix(d, rng, 1 + (i / 3) % d);
    auto h = random_hermitian(d, rng);
    auto b = metric_adjusted_bounds_check(rho, h);
    if (b.lower > b.qfi + 1e-9 || b.qfi > b.upper + 1e-9) ++bad_sandwich;
    auto full = random_density_matrix(d, rng);
    const double closed = ibar_closed_form(full, h), quad = ibar_quadrature(full, h);
    const double rel = std::abs(closed - quad) / std::max(std::abs(closed), 1e-300);
    if (closed != quad) worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-8 && std::abs(closed - quad) > 1e-15) ++bad_quadrature;
  }
  return {bad_sandwich == 0 && bad_quadrature == 0,
          fmt("200 pairs, %d sandwich violations, %d quadrature mismatches, worst relative gap %.3g", bad_sandwich,
              bad_quadrature, worst_rel)};
}

Verdict pure_state_identity() {
  Rng rng(8);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Index d = 2 + i % 3;
    DensityMatrix psi(random_pure_state(d, rng));
    auto inst = random_instance(d, 5000 + static_cast<std::uint64_t>(i));
    auto g = inst.free + inst.pert;
    const Matrix gp = g.apply(psi.matrix());
    const double m1 = (psi.matrix() * gp).trace().real();
    const double m2 = (psi.matrix() * gp * gp).trace().real();
    const double f = qfi(psi, g);
    const double gap = std::abs(f - (4.0 * m2 - 3.0 * m1 * m1));
    const double n = operator_norm(gp);
    worst = std::max(worst, gap);
    if (gap > 1e-9 || f > 4.0 * n * n + 1e-9) ++bad;
  }
  return {bad == 0, fmt("200 pairs, %d failing, largest identity gap %.3g", bad, worst)};
}

Verdict fdr_scaling() {
  Rng rng(1);
  const double scales[] = {0.1, 0.05, 0.025};
  int slow = 0;
  double min_slope = INFINITY;
  for (int i = 0; i < 100; ++i) {
    const Index d = 2 + i % 2;
    auto h = random_hermitian(d, rng);
    auto dh = random_hermitian(d, rng);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double s : scales) {
      const double x = std::log(s), y = std::log(std::abs(fdr_check(h, s * dh, 1.0).residual));
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    min_slope = std::min(min_slope, slope);
    if (!(slope >= 2.7)) ++slow;
  }
  return {slow == 0, fmt("100 quenches, %d with slope < 2.7, min slope %.3f", slow, min_slope)};
}

Verdict result4_suite() {
  const double beta = 1.0;
  auto bath = ohmic_gamma(0.05, 20.0, beta);
  auto cfg = make_config(2.0, 100, 0.005);
  Rng rng(10);
  int quenches = 0, failed = 0, nonzero_commuting = 0;
  double worst = INFINITY, worst_ibar = 0.0;
  for (int i = 0; i < 12; ++i) {
    const Index d = 2 + i % 2;
    Matrix hm = Matrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) hm(k, k) = k == 0 ? 0.0 : 1.0 + 0.37 * static_cast<double>(k * k);
    HermitianOperator h(hm);
    WeakCouplingModel model{h, {random_hermitian(d, rng)}, 0.1, bath};
    const bool commuting = i % 3 == 0;
    Matrix dm = random_hermitian(d, rng, 0.05).matrix();
    if (commuting) dm = Matrix(dm.diagonal().asDiagonal());
    auto r = result4_bound(model, h + HermitianOperator(dm), beta, cfg);
    ++quenches;
    worst = std::min(worst, r.report.min_margin());
    if (!r.report.holds(1e-6)) ++failed;
    if (commuting) {
      worst_ibar = std::max(worst_ibar, r.ibar);
      if (r.ibar > 1e-12) ++nonzero_commuting;
    }
  }
  return {failed == 0 && nonzero_commuting == 0,
          fmt("%d quenches, %d failing, min margin %.3g, largest commuting Ibar %.3g", quenches, failed, worst,
              worst_ibar)};
}

Verdict metric_suite() {
  Rng rng(11);
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    const Index d = 2 + i % 3;
    auto a = random_density_matrix(d, rng, 1 + i % d);
    auto b = random_density_matrix(d, rng);
    auto c = random_density_matrix(d, rng, 1 + (i / 3) % d);
    const double ab = bures_angle(a, b);
    bool ok = bures_angle(a, c) <= ab + bures_angle(b, c) + 1e-7;
    ok = ok && trace_distance(a, b) <= ab + 1e-7 && bures_distance(a, b) <= ab + 1e-7;
    auto m = Measurement::projective(random_unitary(d, rng));
    ok = ok && std::acos(std::min(1.0, bhattacharyya(measure(a, m), measure(b, m)))) <= ab + 1e-7;
    auto g = random_instance(d, 9000 + static_cast<std::uint64_t>(i)).free;
    std::uniform_real_distribution<double> u(0.001, 0.05);
    IntegratorConfig cfg;
    cfg.h_int = u(rng);
    cfg.output_times = {0.0, cfg.h_int};
    ok = ok && bures_angle(integrate(g, a, cfg).states.back(), integrate(g, b, cfg).states.back()) <= ab + 1e-7;
    if (!ok) ++bad;
  }
  return {bad == 0, fmt("500 cases, %d failing", bad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Verdict hygiene() {
  auto coarse = two_qubit_dephasing();
  auto fine_cfg = coarse.config();
  fine_cfg.h_int /= 2.0;
  double worst = 0.0;
  auto f2a = fig2_run(coarse, coarse.config()), f2b = fig2_run(coarse, fine_cfg);
  for (size_t i = 0; i < f2a.rows.size(); ++i) {
    worst = std::max({worst, std::abs(f2a.rows[i].measured_speed - f2b.rows[i].measured_speed),
                      std::abs(f2a.rows[i].exact_avg_sqrt_qfi - f2b.rows[i].exact_avg_sqrt_qfi),
                      std::abs(f2a.rows[i].corrected_lower_bound - f2b.rows[i].corrected_lower_bound)});
  }
  auto f3a = fig3_run(coarse, coarse.config()), f3b = fig3_run(coarse, fine_cfg);
  for (size_t i = 0; i < f3a.size(); ++i)
    worst = std::max({worst, std::abs(f3a[i].delta1 - f3b[i].delta1), std::abs(f3a[i].delta2 - f3b[i].delta2),
                      std::abs(f3a[i].delta_est - f3b[i].delta_est)});
  auto r1a = result1_bound(coarse.problem.free, coarse.problem.v * coarse.problem.v_gen, coarse.rho0, coarse.config());
  auto r1b = result1_bound(coarse.problem.free, coarse.problem.v * coarse.problem.v_gen, coarse.rho0, fine_cfg);
  for (size_t i = 0; i < r1a.times.size(); ++i)
    worst = std::max({worst, std::abs(r1a.lhs[i] - r1b.lhs[i]), std::abs(r1a.rhs[i] - r1b.rhs[i])});

  bool identical = true;
  const auto base = fs::temp_directory_path() / "qsl_acceptance";
  for (const char* cmd : {"fig2", "fig3", "random-suite"}) {
    std::string dirs[2];
    for (int k = 0; k < 2; ++k) {
      dirs[k] = (base / (std::string(cmd) + std::to_string(k))).string();
      fs::remove_all(dirs[k]);
      cli::Overrides ov;
      ov.out_dir = dirs[k];
      ov.quiet = true;
      ov.seed = 20;
      if (std::string(cmd) == "fig2") ov.shots = 1000;
      if (std::string(cmd) == "random-suite") ov.count = 10;
      std::ostringstream out, err;
      cli::execute(cmd, ov, out, err);
    }
    for (const auto& e : fs::directory_iterator(dirs[0]))
      identical = identical && slurp(e.path()) == slurp(fs::path(dirs[1]) / e.path().filename());
  }
  return {worst < 1e-6 && identical,
          fmt("largest change on halving the step %.3g, identical-seed outputs %s", worst,
              identical ? "byte-identical" : "differ")};
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> list{
      {"two-qubit witness crossing times", fig2_crossings},
      {"two-qubit error budget", fig3_budget},
      {"epsilon consistency", epsilon_consistency},
      {"state-distance bound on random instances", [] { return random_suite(false); }},
      {"observable-rate bound on random instances", [] { return random_suite(true); }},
      {"weak-coupling bound with exact errors", exact_error_form},
      {"skew-information sandwich and quadrature", sandwich},
      {"pure-state fisher information identity", pure_state_identity},
      {"work fluctuation-dissipation scaling", fdr_scaling},
      {"quench departure bound", result4_suite},
      {"metric inequalities and contractivity", metric_suite},
      {"numerical hygiene", hygiene},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  const auto& list = criteria();
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(list.size())) {
      std::fprintf(stderr, "criterion must be 1..%zu\n", list.size());
      return 1;
    }
  }
  int failures = 0;
  for (size_t i = 0; i < list.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Verdict v{false, ""};
    try {
      v = list[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, list[i].first.c_str(), v.detail.c_str());
    if (!v.pass) ++failures;
  }
  return failures ? 1 : 0;
}
