#include "qsl/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "qsl/scenarios.hpp"

namespace qsl::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- json access

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& req(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(sub(key) + ": required field is missing");
    return j_.at(key);
  }

  const json* opt(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  double num(const std::string& key) { return as_number(req(key), sub(key)); }
  double num_or(const std::string& key, double fallback) {
    const json* v = opt(key);
    return v ? as_number(*v, sub(key)) : fallback;
  }
  int integer(const std::string& key) { return as_int(req(key), sub(key)); }
  int int_or(const std::string& key, int fallback) {
    const json* v = opt(key);
    return v ? as_int(*v, sub(key)) : fallback;
  }
  std::string str(const std::string& key) {
    const json& v = req(key);
    if (!v.is_string()) throw ConfigError(sub(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string str_or(const std::string& key, const std::string& fallback) {
    const json* v = opt(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(sub(key) + ": expected a string");
    return v->get<std::string>();
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()) + ": unknown key");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path + ": must be finite");
    return x;
  }

  static int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return v.get<int>();
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Complex parse_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {Obj::as_number(v, path), 0.0};
  if (v.is_array() && v.size() == 2)
    return {Obj::as_number(v[0], path + "[0]"), Obj::as_number(v[1], path + "[1]")};
  throw ConfigError(path + ": expected a number or an [re, im] pair");
}

Matrix parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(v.size());
  Matrix m(rows, rows);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = v[static_cast<size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != rows) throw ConfigError(rp + ": matrix must be square");
    for (Index j = 0; j < rows; ++j)
      m(i, j) = parse_complex(row[static_cast<size_t>(j)], rp + "[" + std::to_string(j) + "]");
  }
  return m;
}

HermitianOperator parse_hermitian(const json& v, const std::string& path) {
  try {
    return HermitianOperator(parse_matrix(v, path));
  } catch (const InvalidHermitian& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

BathSpectrum parse_bath(const json& v, const std::string& path) {
  Obj o(v, path);
  const std::string type = o.str("type");
  BathSpectrum b;
  if (type == "ohmic") {
    b = ohmic_gamma(o.num("eta"), o.num("omega_c"), o.num("beta"));
  } else if (type == "flat") {
    b = flat_spectrum(o.num("gamma0"));
  } else {
    throw ConfigError(o.sub("type") + ": expected \"ohmic\" or \"flat\"");
  }
  o.finish();
  return b;
}

std::vector<HermitianOperator> parse_operator_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of matrices");
  std::vector<HermitianOperator> out;
  for (size_t i = 0; i < v.size(); ++i) out.push_back(parse_hermitian(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// ------------------------------------------------------------------ scenarios

struct WeakSetup {
  Scenario scenario;
  std::optional<HermitianOperator> observable;
};

struct QuenchSetup {
  WeakCouplingModel model;
  HermitianOperator delta_h;
  double beta;
};

struct RandomSetup {
  Index dim;
  std::uint64_t seed;
  double rate_cap;
  double v_cap;
};

using Setup = std::variant<WeakSetup, QuenchSetup, RandomSetup>;

const std::set<std::string> kWeakReports{"fig2", "fig3", "witness", "result1", "result2", "result3", "linear-response"};
const std::set<std::string> kQuenchReports{"result4", "fdr"};
const std::set<std::string> kRandomReports{"result1", "result2"};
const std::set<std::string> kScenarioNames{"two_qubit_dephasing", "dephasing_qubit", "weak_coupling", "quench",
                                           "random"};

ProblemOptions problem_options(const RunConfig& c) {
  ProblemOptions p;
  p.epsilon_samples = c.epsilon_samples;
  p.seed = c.seed;
  return p;
}

void finish_scenario(Scenario& s, const RunConfig& c) {
  s.t_max = c.t_max;
  s.intervals = c.points;
  s.h_int = std::min(c.h_int.value_or(default_step(s.problem.timescales)), c.t_max / c.points);
}

Setup build_setup(const RunConfig& c) {
  Obj o(c.scenario, "scenario");
  const std::string name = o.str("name");
  const auto opts = problem_options(c);

  if (name == "two_qubit_dephasing") {
    const double h = o.num_or("h", 1.0);
    const double lambda = o.num_or("lambda", 0.1);
    const double gamma0 = o.num_or("gamma0", 0.1);
    const double v = o.num_or("v", 0.1);
    o.finish();
    WeakSetup w{two_qubit_dephasing(h, lambda, gamma0, v, opts), HermitianOperator(bell_state(0).projector())};
    finish_scenario(w.scenario, c);
    return w;
  }
  if (name == "dephasing_qubit") {
    const double h = o.num_or("h", 1.0);
    const double lambda = o.num_or("lambda", 0.1);
    const double gamma0 = o.num_or("gamma0", 0.1);
    const double v = o.num_or("v", 0.05);
    o.finish();
    WeakCouplingModel model{HermitianOperator(0.5 * h * pauli_z()), {HermitianOperator(pauli_z())}, lambda,
                            flat_spectrum(gamma0)};
    auto problem = make_perturbed_problem(model, HermitianOperator(0.5 * pauli_x()), v, opts);
    Scenario s{"dephasing_qubit", std::move(problem), DensityMatrix::maximally_mixed(2), std::nullopt,
               std::nullopt, c.t_max, c.points, 0.0};
    WeakSetup w{std::move(s), HermitianOperator(pauli_z())};
    finish_scenario(w.scenario, c);
    return w;
  }
  if (name == "weak_coupling") {
    const auto h = parse_hermitian(o.req("H"), o.sub("H"));
    auto couplings = parse_operator_list(o.req("couplings"), o.sub("couplings"));
    const double lambda = o.num("lambda");
    auto bath = parse_bath(o.req("bath"), o.sub("bath"));
    const auto v_op = parse_hermitian(o.req("V"), o.sub("V"));
    const double v = o.num("v");
    const Matrix rho = parse_matrix(o.req("rho0"), o.sub("rho0"));
    std::optional<HermitianOperator> observable;
    if (const json* a = o.opt("observable")) observable = parse_hermitian(*a, o.sub("observable"));
    std::optional<Measurement> measurement;
    if (const json* m = o.opt("measurement_basis")) {
      try {
        measurement = Measurement::projective(parse_matrix(*m, o.sub("measurement_basis")));
      } catch (const Error& e) {
        throw ConfigError(o.sub("measurement_basis") + ": " + e.what());
      }
    }
    std::optional<double> threshold;
    if (o.has("threshold")) threshold = o.num("threshold");
    o.finish();
    std::optional<DensityMatrix> rho0;
    try {
      rho0.emplace(rho);
    } catch (const Error& e) {
      throw ConfigError(o.sub("rho0") + ": " + e.what());
    }
    WeakCouplingModel model{h, std::move(couplings), lambda, std::move(bath)};
    auto problem = make_perturbed_problem(model, v_op, v, opts);
    Scenario s{"weak_coupling", std::move(problem), *rho0, measurement, threshold, c.t_max, c.points, 0.0};
    WeakSetup w{std::move(s), observable};
    finish_scenario(w.scenario, c);
    return w;
  }
  if (name == "quench") {
    const double beta = o.num_or("beta", 1.0);
    const json* hj = o.opt("H");
    const json* dj = o.opt("delta_H");
    const json* cj = o.opt("couplings");
    const json* bj = o.opt("bath");
    const double lambda = o.num_or("lambda", 0.1);
    o.finish();
    const HermitianOperator h = hj ? parse_hermitian(*hj, "scenario.H") : HermitianOperator(0.5 * pauli_z());
    const HermitianOperator dh = dj ? parse_hermitian(*dj, "scenario.delta_H") : HermitianOperator(0.05 * pauli_x());
    auto couplings = cj ? parse_operator_list(*cj, "scenario.couplings")
                        : std::vector<HermitianOperator>{HermitianOperator(pauli_z())};
    auto bath = bj ? parse_bath(*bj, "scenario.bath") : ohmic_gamma(0.05, 20.0, beta);
    if (dh.dim() != h.dim()) throw ConfigError("scenario.delta_H: dimension differs from scenario.H");
    return QuenchSetup{WeakCouplingModel{h, std::move(couplings), lambda, std::move(bath)}, dh, beta};
  }
  if (name == "random") {
    const int dim = o.int_or("dim", 3);
    const auto seed = static_cast<std::uint64_t>(o.int_or("seed", static_cast<int>(c.seed)));
    const double rate_cap = o.num_or("rate_cap", 1.0);
    const double v_cap = o.num_or("v_cap", 0.2);
    o.finish();
    if (dim < 2 || dim > 8) throw ConfigError("scenario.dim: must lie in [2, 8]");
    return RandomSetup{dim, seed, rate_cap, v_cap};
  }
  throw ConfigError("scenario.name: unknown scenario \"" + name + "\"");
}

// -------------------------------------------------------------------- reports

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::optional<double> min_margin;
  std::vector<std::string> notes;
  std::vector<std::string> warnings;
};

Table bound_table(const BoundReport& r) {
  Table t{r.name, {"t", "lhs", "rhs", "margin"}, {}, r.min_margin(), {}, r.warnings};
  for (size_t i = 0; i < r.times.size(); ++i) t.rows.push_back({r.times[i], r.lhs[i], r.rhs[i], r.margin[i]});
  return t;
}

std::string failed_flags(const TimescaleReport& ts) {
  std::vector<std::string> failed;
  if (!ts.born_markov) failed.emplace_back("(i) tau_B << tau_R");
  if (!ts.rotating_wave) failed.emplace_back("(ii) tau_S << tau_R");
  if (!ts.weak_vs_bath) failed.emplace_back("(iii) tau_B << tau_V");
  if (!ts.weak_vs_system) failed.emplace_back("(iv) tau_S << tau_V");
  std::string s;
  for (const auto& f : failed) s += (s.empty() ? "" : ", ") + f;
  return s;
}

std::string fmt(double x) { return format_double(x); }

std::vector<Table> weak_reports(const WeakSetup& w, const RunConfig& c, const std::vector<std::string>& reports) {
  const Scenario& s = w.scenario;
  const auto cfg = s.config();
  std::vector<Table> out;
  std::optional<WeakCouplingRun> run;
  auto get_run = [&]() -> const WeakCouplingRun& {
    if (!run) run = run_weak_coupling(s.problem, s.rho0, cfg, c.dynamics);
    return *run;
  };

  for (const auto& name : reports) {
    if (name == "fig2" || name == "witness") {
      if (!s.measurement || !s.threshold)
        throw ConfigError("reports: " + name + " needs scenario.measurement_basis and scenario.threshold");
      const auto f2 = fig2_table(s, get_run(), c.shots, c.seed);
      Table t;
      t.name = name;
      if (name == "fig2") {
        t.columns = {"t", "measured_speed", "exact_avg_sqrt_qfi", "corrected_lower_bound", "threshold"};
        for (const auto& r : f2.rows)
          t.rows.push_back({r.t, r.measured_speed, r.exact_avg_sqrt_qfi, r.corrected_lower_bound, r.threshold});
      } else {
        t.columns = {"t", "statistic", "threshold", "corrected_threshold", "witnessed"};
        for (const auto& r : f2.rows) {
          const double corrected = r.threshold + (r.measured_speed - r.corrected_lower_bound);
          t.rows.push_back({r.t, r.measured_speed, r.threshold, corrected, r.measured_speed > corrected ? 1.0 : 0.0});
        }
      }
      t.notes.push_back("epsilon_upper = " + fmt(s.problem.epsilon_upper));
      t.notes.push_back("epsilon_sampled = " + fmt(s.problem.epsilon_sampled));
      auto crossing = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string("none"); };
      t.notes.push_back("exact_avg_sqrt_qfi crosses threshold at t = " + crossing(f2.exact_crossing));
      t.notes.push_back("measured_speed crosses threshold at t = " + crossing(f2.measured_crossing));
      t.notes.push_back("corrected_lower_bound crosses threshold at t = " + crossing(f2.corrected_crossing));
      out.push_back(std::move(t));
    } else if (name == "fig3") {
      const auto rows = fig3_table(s, get_run());
      Table t{"fig3", {"t", "delta1", "delta2", "delta1_plus_delta2", "delta_est", "margin"}, {}, {}, {}, {}};
      double m = std::numeric_limits<double>::infinity();
      for (const auto& r : rows) {
        t.rows.push_back({r.t, r.delta1, r.delta2, r.delta1_plus_delta2, r.delta_est, r.delta_est - r.delta1_plus_delta2});
        m = std::min(m, r.delta_est - r.delta1_plus_delta2);
      }
      t.min_margin = m;
      out.push_back(std::move(t));
    } else if (name == "result1") {
      out.push_back(bound_table(result1_bound(s.problem.free, s.problem.v * s.problem.v_gen, s.rho0, cfg)));
    } else if (name == "result2") {
      if (!w.observable) throw ConfigError("reports: result2 needs scenario.observable");
      out.push_back(
          bound_table(result2_bound(s.problem.free, s.problem.v * s.problem.v_gen, *w.observable, s.rho0, cfg)));
    } else if (name == "result3") {
      const auto r3 = result3_bound(get_run(), s.problem);
      Table t{"result3",
              {"t", "lhs", "rhs", "margin", "delta1", "delta2", "delta_est", "rhs_exact_error", "margin_exact_error"},
              {},
              r3.estimate.min_margin(),
              {},
              r3.estimate.warnings};
      for (size_t i = 0; i < r3.estimate.times.size(); ++i)
        t.rows.push_back({r3.estimate.times[i], r3.estimate.lhs[i], r3.estimate.rhs[i], r3.estimate.margin[i],
                          r3.budget.delta1[i], r3.budget.delta2[i], r3.budget.delta_est[i], r3.exact_error.rhs[i],
                          r3.exact_error.margin[i]});
      t.notes.push_back("min margin with exact errors = " + fmt(r3.exact_error.min_margin()));
      out.push_back(std::move(t));
    } else if (name == "linear-response") {
      if (!w.observable) throw ConfigError("reports: linear-response needs scenario.observable");
      const double v = s.problem.v;
      const auto lr = linear_response_bounds(s.problem.free, s.rho0, *w.observable, s.problem.v_op,
                                             [v](double) { return v; }, cfg, s.problem.epsilon_upper);
      Table t{"linear-response", {"t", "abs_delta_a", "norm_bound", "fluctuation_bound", "margin_norm",
                                  "margin_fluctuation"},
              {}, std::min(lr.norm_bound.min_margin(), lr.fluctuation_bound.min_margin()), {}, {}};
      for (size_t i = 0; i < lr.norm_bound.times.size(); ++i)
        t.rows.push_back({lr.norm_bound.times[i], lr.norm_bound.lhs[i], lr.norm_bound.rhs[i],
                          lr.fluctuation_bound.rhs[i], lr.norm_bound.margin[i], lr.fluctuation_bound.margin[i]});
      out.push_back(std::move(t));
    } else {
      throw ConfigError("reports: report \"" + name + "\" is not available for this scenario");
    }
  }
  if (!s.problem.timescales.all() && !out.empty())
    out.front().warnings.push_back("timescale assumptions fail: " + failed_flags(s.problem.timescales));
  if (s.problem.degeneracy.broken && !out.empty()) out.front().warnings.push_back(s.problem.degeneracy.advisory);
  return out;
}

std::vector<Table> quench_reports(const QuenchSetup& q, const RunConfig& c, const std::vector<std::string>& reports) {
  std::vector<Table> out;
  const auto cfg = make_config(c.t_max, c.points, c.h_int.value_or(c.t_max / c.points));
  for (const auto& name : reports) {
    if (name == "result4") {
      const auto r4 = result4_bound(q.model, q.model.h + q.delta_h, q.beta, cfg, problem_options(c));
      auto t = bound_table(r4.report);
      t.notes.push_back("ibar = " + fmt(r4.ibar));
      t.notes.push_back("epsilon_upper = " + fmt(r4.budget.epsilon_used));
      t.notes.push_back(std::string("quantum_driving = ") + (r4.quantum_driving ? "true" : "false"));
      t.notes.push_back(std::string("classical_driving = ") + (r4.classical_driving ? "true" : "false"));
      out.push_back(std::move(t));
    } else if (name == "fdr") {
      Table t{"fdr", {"scale", "var_w", "w_diss", "kubo_mori_half_beta", "q_w", "residual"}, {}, {}, {}, {}};
      for (double scale : {1.0, 0.5, 0.25}) {
        const auto r = fdr_check(q.model.h, scale * q.delta_h, q.beta);
        t.rows.push_back({scale, r.var_w, r.w_diss_exact, r.kubo_mori_half_beta, r.q_w, r.residual});
      }
      out.push_back(std::move(t));
    } else {
      throw ConfigError("reports: report \"" + name + "\" is not available for the quench scenario");
    }
  }
  return out;
}

std::vector<Table> random_reports(const RandomSetup& r, const RunConfig& c, const std::vector<std::string>& reports) {
  std::vector<Table> out;
  const auto inst = random_instance(r.dim, r.seed, r.rate_cap, r.v_cap);
  const auto cfg = make_config(c.t_max, c.points, c.h_int.value_or(c.t_max / c.points));
  for (const auto& name : reports) {
    if (name == "result1") {
      out.push_back(bound_table(result1_bound(inst.free, inst.pert, inst.rho0, cfg)));
    } else if (name == "result2") {
      out.push_back(bound_table(result2_bound(inst.free, inst.pert, inst.observable, inst.rho0, cfg)));
    } else {
      throw ConfigError("reports: report \"" + name + "\" is not available for the random scenario");
    }
  }
  return out;
}

Table random_suite(const RunConfig& c) {
  Table t{"random_suite", {"instance", "dim", "seed", "result1_min_margin", "result2_min_margin"}, {}, {}, {}, {}};
  const auto cfg = make_config(c.t_max, c.points, c.h_int.value_or(c.t_max / c.points));
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.count; ++i) {
    const int dim = c.dims[static_cast<size_t>(i) % c.dims.size()];
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
    const auto inst = random_instance(dim, seed);
    const double m1 = result1_bound(inst.free, inst.pert, inst.rho0, cfg).min_margin();
    const double m2 = result2_bound(inst.free, inst.pert, inst.observable, inst.rho0, cfg).min_margin();
    t.rows.push_back({static_cast<double>(i), static_cast<double>(dim), static_cast<double>(seed), m1, m2});
    m = std::min({m, m1, m2});
  }
  if (c.count > 0) t.min_margin = m;
  return t;
}

// --------------------------------------------------------------------- output

std::string csv_text(const Table& t, const RunConfig& c, const std::string& hash, double h_int) {
  std::ostringstream os;
  os << "# tool_version=" << kToolVersion << "\n";
  os << "# config_hash=" << hash << "\n";
  os << "# seed=" << c.seed << "\n";
  os << "# h_int=" << format_double(h_int) << "\n";
  for (size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string status_of(const Table& t) {
  if (!t.min_margin) return "no bound";
  if (*t.min_margin >= 0.0) return "holds";
  if (*t.min_margin >= -kMarginNoise) return "holds (negative margin within numerical noise)";
  return "VIOLATED";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << text;
}

double effective_h_int(const Setup& setup, const RunConfig& c) {
  if (const auto* w = std::get_if<WeakSetup>(&setup)) return w->scenario.h_int;
  return std::min(c.h_int.value_or(c.t_max / c.points), c.t_max / c.points);
}

const char* usage_text =
    "subcommands: run, fig2, fig3, witness, result1, result2, result3, result4, fdr, linear-response, random-suite";

}  // namespace

// ---------------------------------------------------------------- public API

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

RunConfig parse_config(const json& j) {
  Obj o(j, "");
  const int version = o.integer("schema_version");
  if (version != kSchemaVersion)
    throw ConfigError("schema_version: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  RunConfig c;
  c.scenario = o.req("scenario");
  {
    Obj s(c.scenario, "scenario");
    const std::string name = s.str("name");
    if (!kScenarioNames.count(name)) throw ConfigError("scenario.name: unknown scenario \"" + name + "\"");
  }
  {
    Obj g(o.req("grid"), "grid");
    c.t_max = g.num("t_max");
    c.points = g.integer("points");
    g.finish();
    if (!(c.t_max > 0.0)) throw ConfigError("grid.t_max: must be > 0");
    if (c.points < 1) throw ConfigError("grid.points: must be >= 1");
  }
  if (const json* ij = o.opt("integrator")) {
    Obj in(*ij, "integrator");
    if (in.has("h_int")) {
      c.h_int = in.num("h_int");
      if (!(*c.h_int > 0.0)) throw ConfigError("integrator.h_int: must be > 0");
    }
    const std::string dyn = in.str_or("dynamics", "exact_rebuild");
    if (dyn == "exact_rebuild") {
      c.dynamics = PerturbedDynamics::ExactRebuild;
    } else if (dyn == "first_order") {
      c.dynamics = PerturbedDynamics::FirstOrder;
    } else {
      throw ConfigError("integrator.dynamics: expected \"exact_rebuild\" or \"first_order\"");
    }
    in.finish();
  }
  if (const json* rj = o.opt("reports")) {
    if (!rj->is_array()) throw ConfigError("reports: expected an array of report names");
    for (size_t i = 0; i < rj->size(); ++i) {
      if (!(*rj)[i].is_string()) throw ConfigError("reports[" + std::to_string(i) + "]: expected a string");
      c.reports.push_back((*rj)[i].get<std::string>());
    }
  }
  c.output_dir = o.str_or("output_dir", ".");
  if (const json* sj = o.opt("seed")) {
    if (!sj->is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
    c.seed = sj->get<std::uint64_t>();
  }
  c.shots = o.int_or("shots", 0);
  if (c.shots < 0) throw ConfigError("shots: must be >= 0");
  c.epsilon_samples = o.int_or("epsilon_samples", 2000);
  if (c.epsilon_samples < 0) throw ConfigError("epsilon_samples: must be >= 0");
  if (const json* sj = o.opt("random_suite")) {
    Obj r(*sj, "random_suite");
    c.count = r.int_or("count", 100);
    if (const json* dj = r.opt("dims")) {
      if (!dj->is_array() || dj->empty()) throw ConfigError("random_suite.dims: expected a non-empty integer array");
      c.dims.clear();
      for (size_t i = 0; i < dj->size(); ++i)
        c.dims.push_back(Obj::as_int((*dj)[i], "random_suite.dims[" + std::to_string(i) + "]"));
    }
    r.finish();
  }
  o.finish();
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

RunConfig default_config(const std::string& command) {
  json j{{"schema_version", kSchemaVersion}, {"grid", {{"t_max", 2.0}, {"points", 400}}}};
  if (command == "result4" || command == "fdr") {
    j["scenario"] = {{"name", "quench"}};
  } else if (command == "linear-response") {
    j["scenario"] = {{"name", "dephasing_qubit"}};
  } else if (command == "random-suite") {
    j["scenario"] = {{"name", "random"}};
  } else {
    j["scenario"] = {{"name", "two_qubit_dephasing"}};
  }
  if (command == "run") {
    j["reports"] = {"fig2"};
  } else if (command != "random-suite") {
    j["reports"] = {command};
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j{{"schema_version", kSchemaVersion},
         {"scenario", c.scenario},
         {"grid", {{"t_max", c.t_max}, {"points", c.points}}},
         {"reports", c.reports},
         {"output_dir", c.output_dir},
         {"seed", c.seed},
         {"shots", c.shots},
         {"epsilon_samples", c.epsilon_samples},
         {"random_suite", {{"count", c.count}, {"dims", c.dims}}}};
  json integ{{"dynamics", c.dynamics == PerturbedDynamics::ExactRebuild ? "exact_rebuild" : "first_order"}};
  if (c.h_int) integ["h_int"] = *c.h_int;
  j["integrator"] = integ;
  return j;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int execute(const std::string& command, const Overrides& ov, std::ostream& out, std::ostream& err) {
  static const std::set<std::string> commands{"run",     "fig2",    "fig3",    "witness", "result1",         "result2",
                                              "result3", "result4", "fdr",     "linear-response", "random-suite"};
  if (!commands.count(command)) {
    err << "unknown subcommand \"" << command << "\"; " << usage_text << "\n";
    return kUsageError;
  }
  RunConfig c;
  try {
    if (ov.config_path) {
      c = load_config_file(*ov.config_path);
      if (command != "run" && command != "random-suite") c.reports = {command};
    } else if (command == "run") {
      err << "run: --config is required\n";
      return kUsageError;
    } else {
      c = default_config(command);
    }
    if (ov.out_dir) c.output_dir = *ov.out_dir;
    if (ov.seed) c.seed = *ov.seed;
    if (ov.grid_points) {
      if (*ov.grid_points < 1) throw ConfigError("--grid-points: must be >= 1");
      c.points = *ov.grid_points;
    }
    if (ov.t_max) {
      if (!(*ov.t_max > 0.0)) throw ConfigError("--t-max: must be > 0");
      c.t_max = *ov.t_max;
    }
    if (ov.shots) {
      if (*ov.shots < 0) throw ConfigError("--shots: must be >= 0");
      c.shots = *ov.shots;
    }
    if (ov.count) {
      if (*ov.count < 0) throw ConfigError("--count: must be >= 0");
      c.count = *ov.count;
    }
    if (ov.dims) {
      if (ov.dims->empty()) throw ConfigError("--dims: empty list");
      for (int d : *ov.dims)
        if (d < 2 || d > 8) throw ConfigError("--dims: dimensions must lie in [2, 8]");
      c.dims = *ov.dims;
    }
    if (command != "random-suite" && c.reports.empty()) throw ConfigError("reports: no reports requested");
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  std::vector<Table> tables;
  double h_int = std::min(c.h_int.value_or(c.t_max / c.points), c.t_max / c.points);
  try {
    if (command == "random-suite") {
      tables.push_back(random_suite(c));
    } else {
      const Setup setup = build_setup(c);
      h_int = effective_h_int(setup, c);
      if (const auto* w = std::get_if<WeakSetup>(&setup)) {
        for (const auto& r : c.reports)
          if (!kWeakReports.count(r)) throw ConfigError("reports: \"" + r + "\" is not available for this scenario");
        tables = weak_reports(*w, c, c.reports);
      } else if (const auto* q = std::get_if<QuenchSetup>(&setup)) {
        tables = quench_reports(*q, c, c.reports);
      } else {
        tables = random_reports(std::get<RandomSetup>(setup), c, c.reports);
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  const std::string hash = config_hash(c);
  std::ostringstream summary;
  summary << "qsl " << kToolVersion << "\n";
  summary << "config_hash " << hash << "\n";
  summary << "seed " << c.seed << "\n";
  summary << "h_int " << format_double(h_int) << "\n";
  summary << "grid [0, " << format_double(c.t_max) << "] with " << c.points << " intervals\n";
  bool violated = false;
  std::vector<std::string> warnings;
  for (const auto& t : tables) {
    summary << "\n[" << t.name << "]\n";
    summary << "rows " << t.rows.size() << "\n";
    if (t.min_margin) summary << "min_margin " << format_double(*t.min_margin) << "\n";
    summary << "status " << status_of(t) << "\n";
    for (const auto& n : t.notes) summary << n << "\n";
    if (t.min_margin && *t.min_margin < -kMarginNoise) violated = true;
    for (const auto& w : t.warnings) warnings.push_back(t.name + ": " + w);
  }
  summary << "\nwarnings\n";
  if (warnings.empty()) summary << "none\n";
  for (const auto& w : warnings) summary << "- " << w << "\n";

  try {
    std::filesystem::create_directories(c.output_dir);
    for (const auto& t : tables) write_file(std::filesystem::path(c.output_dir) / (t.name + ".csv"), csv_text(t, c, hash, h_int));
    write_file(std::filesystem::path(c.output_dir) / "summary.txt", summary.str());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  if (!ov.quiet) out << summary.str();
  return violated ? kBoundViolation : kOk;
}

int main(int argc, char** argv) {
  CLI::App app{"Speed limits for perturbed Markovian open quantum systems"};
  app.require_subcommand(1);
  Overrides ov;
  std::string config, out_dir;
  std::uint64_t seed = 0;
  int grid_points = 0, shots = 0, count = 0;
  double t_max = 0.0;
  std::vector<int> dims;

  const std::vector<std::pair<std::string, std::string>> subcommands{
      {"run", "run every report listed in --config"},
      {"fig2", "witness statistic, time-averaged sqrt QFI and corrected bound"},
      {"fig3", "weak-coupling error terms against their estimate"},
      {"witness", "witness statistic with the error-corrected threshold"},
      {"result1", "Bures-angle bound between free and perturbed trajectories"},
      {"result2", "observable-rate bound"},
      {"result3", "weak-coupling speed limit"},
      {"result4", "departure from equilibrium after a quench"},
      {"fdr", "work fluctuation-dissipation relation"},
      {"linear-response", "linear-response bounds around a stationary state"},
      {"random-suite", "result1/result2 margins on random instances"}};
  app.fallthrough();
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help);

  auto* o_config = app.add_option("--config", config, "JSON run configuration");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_points = app.add_option("--grid-points", grid_points, "number of grid intervals");
  auto* o_tmax = app.add_option("--t-max", t_max, "final time");
  auto* o_shots = app.add_option("--shots", shots, "measurement shots (0 = exact probabilities)");
  auto* o_count = app.add_option("--count", count, "random-suite instance count");
  auto* o_dims = app.add_option("--dims", dims, "random-suite dimensions")->delimiter(',');
  app.add_flag("--quiet", ov.quiet, "suppress the summary on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }
  if (*o_config) ov.config_path = config;
  if (*o_out) ov.out_dir = out_dir;
  if (*o_seed) ov.seed = seed;
  if (*o_points) ov.grid_points = grid_points;
  if (*o_tmax) ov.t_max = t_max;
  if (*o_shots) ov.shots = shots;
  if (*o_count) ov.count = count;
  if (*o_dims) ov.dims = dims;
  return execute(app.get_subcommands().front()->get_name(), ov, std::cout, std::cerr);
}

}  // namespace qsl::cli
