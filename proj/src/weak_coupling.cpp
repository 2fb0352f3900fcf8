#include "qsl/weak_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "qsl/random.hpp"

namespace qsl {

namespace {

constexpr double kPi = std::numbers::pi;

// x / (1 - e^{-x}) and its derivative.
double bose_factor(double x) { return x == 0.0 ? 1.0 : x / -std::expm1(-x); }

double bose_factor_deriv(double x) {
  if (std::abs(x) < 1e-3) return 0.5 + x / 6.0 - x * x * x / 180.0;
  const double d = -std::expm1(-x);
  return (d - x * std::exp(-x)) / (d * d);
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

Matrix anticommutator_superop(const Matrix& m) {
  const Matrix id = Matrix::Identity(m.rows(), m.cols());
  return kron(id, m) + kron(m.transpose(), id);
}

double min_positive_gap(const RealVector& e) {
  double g = std::numeric_limits<double>::infinity();
  for (Index i = 1; i < e.size(); ++i) g = std::min(g, e(i) - e(i - 1));
  return g;
}

double spectral_value(const SpectralFunction& f, int a, int b, double w) { return f ? f(a, b, w) : 0.0; }

double spectral_deriv(const SpectralFunction& deriv, const SpectralFunction& f, int a, int b, double w, double step) {
  if (deriv) return deriv(a, b, w);
  if (!f) return 0.0;
  return (f(a, b, w + step) - f(a, b, w - step)) / (2.0 * step);
}

// Spectrum argument for the component A(omega), which raises the system energy by omega.
double bath_frequency(double omega) { return -omega; }

Matrix projector(const EigenDecomposition& e, Index n) { return ket_bra(e.vectors.col(n)); }

}  // namespace

BathSpectrum ohmic_gamma(double eta, double omega_c, double beta_bath) {
  if (!(eta > 0.0) || !(omega_c > 0.0) || !(beta_bath > 0.0))
    throw InvalidArgument("ohmic_gamma: eta, omega_c and beta must be > 0");
  BathSpectrum b;
  const double prefactor = 2.0 * kPi * eta / beta_bath;
  b.gamma = [=](int a, int c, double w) {
    if (a != c) return 0.0;
    return prefactor * std::exp(-std::abs(w) / omega_c) * bose_factor(beta_bath * w);
  };
  b.gamma_deriv = [=](int a, int c, double w) {
    if (a != c) return 0.0;
    const double cutoff = std::exp(-std::abs(w) / omega_c);
    const double x = beta_bath * w;
    return prefactor * cutoff * (beta_bath * bose_factor_deriv(x) - sign(w) / omega_c * bose_factor(x));
  };
  b.s_shift = [](int, int, double) { return 0.0; };
  b.s_deriv = [](int, int, double) { return 0.0; };
  b.tau_B = beta_bath;
  return b;
}

BathSpectrum flat_spectrum(double gamma0) {
  if (!(gamma0 >= 0.0)) throw InvalidArgument("flat_spectrum: gamma0 must be >= 0");
  BathSpectrum b;
  b.gamma = [gamma0](int a, int c, double) { return a == c ? gamma0 : 0.0; };
  b.gamma_deriv = [](int, int, double) { return 0.0; };
  b.s_shift = [](int, int, double) { return 0.0; };
  b.s_deriv = [](int, int, double) { return 0.0; };
  b.tau_B = 0.0;
  return b;
}

void WeakCouplingModel::validate() const {
  if (!std::isfinite(lambda)) throw InvalidArgument("WeakCouplingModel: lambda must be finite");
  if (!bath.gamma) throw InvalidArgument("WeakCouplingModel: bath has no gamma function");
  if (!(bath.tau_B >= 0.0)) throw InvalidArgument("WeakCouplingModel: tau_B must be >= 0");
  for (const auto& a : couplings)
    if (a.dim() != h.dim()) throw DimensionMismatch("WeakCouplingModel: coupling dimension differs from H");
}

double default_tol_omega(const HermitianOperator& h) { return 1e-8 * std::max(operator_norm(h.matrix()), 1.0); }

BohrStructure bohr_structure(const HermitianOperator& h, double tol_omega) {
  if (tol_omega <= 0.0) tol_omega = default_tol_omega(h);
  BohrStructure s;
  s.tol_omega = tol_omega;
  s.eig = eig_hermitian(h);
  const Index d = h.dim();
  if (d > 1 && min_positive_gap(s.eig.values) <= tol_omega)
    throw InvalidArgument("bohr_structure: H is degenerate within tol_omega");

  struct Gap {
    double w;
    Index m;
    Index n;
  };
  std::vector<Gap> gaps;
  for (Index m = 0; m < d; ++m)
    for (Index n = 0; n < d; ++n) gaps.push_back({m == n ? 0.0 : s.eig.values(m) - s.eig.values(n), m, n});
  std::stable_sort(gaps.begin(), gaps.end(), [](const Gap& a, const Gap& b) { return a.w < b.w; });

  size_t start = 0;
  while (start < gaps.size()) {
    size_t end = start + 1;
    while (end < gaps.size() && gaps[end].w - gaps[end - 1].w <= tol_omega) ++end;
    if (gaps[end - 1].w - gaps[start].w > tol_omega) {
      std::ostringstream os;
      os << "bohr_structure: gaps from " << gaps[start].w << " to " << gaps[end - 1].w
         << " chain together beyond tol_omega = " << tol_omega;
      throw AmbiguousClustering(os.str());
    }
    BohrCluster c;
    double total = 0.0;
    for (size_t i = start; i < end; ++i) {
      c.pairs.emplace_back(gaps[i].m, gaps[i].n);
      total += gaps[i].w;
    }
    c.omega = total / static_cast<double>(end - start);
    s.clusters.push_back(std::move(c));
    start = end;
  }
  return s;
}

Matrix bohr_component(const BohrStructure& s, const BohrCluster& c, const Matrix& a) {
  const Matrix ab = s.eig.vectors.adjoint() * a * s.eig.vectors;
  Matrix block = Matrix::Zero(a.rows(), a.cols());
  for (const auto& [m, n] : c.pairs) block(m, n) = ab(m, n);
  return s.eig.vectors * block * s.eig.vectors.adjoint();
}

std::vector<BohrComponent> bohr_decompose(const HermitianOperator& h, const HermitianOperator& a, double tol_omega) {
  if (h.dim() != a.dim()) throw DimensionMismatch("bohr_decompose: dimension mismatch");
  const auto s = bohr_structure(h, tol_omega);
  const double zero_tol = 1e-14 * (1.0 + a.matrix().cwiseAbs().maxCoeff());
  std::vector<BohrComponent> out;
  for (const auto& c : s.clusters) {
    Matrix comp = bohr_component(s, c, a.matrix());
    if (comp.cwiseAbs().maxCoeff() > zero_tol) out.push_back({c.omega, std::move(comp)});
  }
  return out;
}

namespace {

SecularME assemble_secular(const WeakCouplingModel& model, BohrStructure structure) {
  model.validate();
  SecularME me{std::move(structure), {}, HermitianOperator::zero(model.h.dim()), {}, Generator::zero(model.h.dim())};
  const Index d = model.h.dim();
  const auto nc = static_cast<int>(model.couplings.size());
  const double lam2 = model.lambda * model.lambda;
  Matrix h_ls = Matrix::Zero(d, d);

  for (const auto& cluster : me.bohr.clusters) {
    std::vector<Matrix> comps;
    comps.reserve(static_cast<size_t>(nc));
    for (const auto& a : model.couplings) comps.push_back(bohr_component(me.bohr, cluster, a.matrix()));
    const double w = cluster.omega;

    if (lam2 > 0.0 && nc > 0) {
      RealMatrix g(nc, nc);
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b) g(a, b) = model.bath.gamma(a, b, bath_frequency(w));
      if (!g.allFinite()) throw UnphysicalBath("build_secular_me: non-finite gamma");
      g = 0.5 * (g + g.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<RealMatrix> solver(g);
      const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
      for (int k = 0; k < nc; ++k) {
        const double rate = solver.eigenvalues()(k);
        if (rate < -1e-10 * scale) {
          std::ostringstream os;
          os << "build_secular_me: gamma matrix at omega = " << w << " has eigenvalue " << rate;
          throw UnphysicalBath(os.str());
        }
        if (rate <= 0.0) continue;
        Matrix jump = Matrix::Zero(d, d);
        for (int b = 0; b < nc; ++b) jump += solver.eigenvectors()(b, k) * comps[static_cast<size_t>(b)];
        if (jump.cwiseAbs().maxCoeff() == 0.0) continue;
        me.terms.push_back({std::move(jump), lam2 * rate});
      }
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b) {
          const double s = spectral_value(model.bath.s_shift, a, b, bath_frequency(w));
          if (s != 0.0) h_ls += lam2 * s * comps[static_cast<size_t>(a)].adjoint() * comps[static_cast<size_t>(b)];
        }
    }
    me.components.push_back(std::move(comps));
  }
  me.h_ls = HermitianOperator(h_ls);
  me.generator = Generator::gksl(model.h + me.h_ls, me.terms);
  return me;
}

}  // namespace

SecularME build_secular_me(const WeakCouplingModel& model, double tol_omega) {
  return assemble_secular(model, bohr_structure(model.h, tol_omega));
}

SecularME build_secular_me_like(const WeakCouplingModel& model, const BohrStructure& reference) {
  BohrStructure s;
  s.tol_omega = reference.tol_omega;
  s.eig = eig_hermitian(model.h);
  const Index d = model.h.dim();
  if (reference.eig.values.size() != d) throw DimensionMismatch("build_secular_me_like: dimension mismatch");
  // Levels keep their order under a small perturbation of a nondegenerate H.
  const Matrix overlap = reference.eig.vectors.adjoint() * s.eig.vectors;
  for (Index n = 0; n < d; ++n)
    if (std::norm(overlap(n, n)) <= 0.5)
      throw NearDegenerate("build_secular_me_like: perturbed eigenvectors do not follow the reference ordering");
  for (const auto& c : reference.clusters) {
    BohrCluster pc;
    pc.pairs = c.pairs;
    double total = 0.0;
    for (const auto& [m, n] : c.pairs) total += m == n ? 0.0 : s.eig.values(m) - s.eig.values(n);
    pc.omega = total / static_cast<double>(c.pairs.size());
    s.clusters.push_back(std::move(pc));
  }
  return assemble_secular(model, std::move(s));
}

FirstOrderPerturbation perturb_eigensystem(const HermitianOperator& h, const HermitianOperator& v) {
  if (h.dim() != v.dim()) throw DimensionMismatch("perturb_eigensystem: dimension mismatch");
  FirstOrderPerturbation p;
  p.eig = eig_hermitian(h);
  const Index d = h.dim();
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * std::max(operator_norm(h.matrix()), 1.0);
  if (d > 1 && min_positive_gap(p.eig.values) < floor)
    throw NearDegenerate("perturb_eigensystem: H has a gap below numerical resolution");
  const Matrix vb = p.eig.vectors.adjoint() * v.matrix() * p.eig.vectors;
  p.e1 = vb.diagonal().real();
  p.c = Matrix::Zero(d, d);
  for (Index n = 0; n < d; ++n)
    for (Index m = 0; m < d; ++m)
      if (m != n) p.c(n, m) = vb(m, n) / (p.eig.values(n) - p.eig.values(m));
  p.q.reserve(static_cast<size_t>(d));
  for (Index n = 0; n < d; ++n) {
    Matrix qn = Matrix::Zero(d, d);
    const auto ket_n = p.eig.vectors.col(n);
    for (Index m = 0; m < d; ++m) {
      if (m == n) continue;
      const auto ket_m = p.eig.vectors.col(m);
      qn += p.c(n, m) * ket_m * ket_n.adjoint() + std::conj(p.c(n, m)) * ket_n * ket_m.adjoint();
    }
    p.q.push_back(0.5 * (qn + qn.adjoint()));
  }
  return p;
}

DegeneracyReport degeneracy_break_check(const SecularME& me, const FirstOrderPerturbation& pert, double tol) {
  DegeneracyReport r;
  for (const auto& c : me.bohr.clusters) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [m, n] : c.pairs) {
      const double shift = pert.e1(m) - pert.e1(n);
      lo = std::min(lo, shift);
      hi = std::max(hi, shift);
    }
    if (hi - lo > tol) r.clusters.push_back({c.omega, lo, hi});
  }
  r.broken = !r.clusters.empty();
  if (r.broken)
    r.advisory =
        "perturbation splits a degenerate Bohr frequency; the error estimate additionally requires tau_R << tau_V";
  return r;
}

PerturbationExpansion first_order_generators(const WeakCouplingModel& model, const SecularME& me,
                                             const FirstOrderPerturbation& pert, double degeneracy_tol,
                                             int epsilon_samples, std::uint64_t seed) {
  const auto report = degeneracy_break_check(me, pert, degeneracy_tol);
  if (report.broken) {
    const auto& b = report.clusters.front();
    std::ostringstream os;
    os << "first_order_generators: Bohr frequency " << b.omega << " splits into shifts " << b.shift_a << " and "
       << b.shift_b << "; " << report.advisory;
    throw DegeneracyBroken(os.str(), b.omega, b.shift_a, b.shift_b);
  }

  const Index d = model.h.dim();
  const auto nc = static_cast<int>(model.couplings.size());
  const double lam2 = model.lambda * model.lambda;
  const double fd_step = 1e-4 * (d > 1 ? min_positive_gap(pert.eig.values) : 1.0);

  std::vector<Matrix> proj;
  for (Index n = 0; n < d; ++n) proj.push_back(projector(pert.eig, n));

  PerturbationExpansion out{pert.e1, pert.c, pert.q, {}, {}, HermitianOperator::zero(d),
                            Generator::zero(d), Generator::zero(d), 0.0, 0.0};
  Matrix h1 = Matrix::Zero(d, d);
  Matrix d1 = Matrix::Zero(d * d, d * d);

  for (size_t ci = 0; ci < me.bohr.clusters.size(); ++ci) {
    const auto& cluster = me.bohr.clusters[ci];
    const auto& comps = me.components[ci];
    double dw = 0.0;
    for (const auto& [m, n] : cluster.pairs) dw += pert.e1(m) - pert.e1(n);
    dw /= static_cast<double>(cluster.pairs.size());
    out.delta_omega.push_back(dw);

    std::vector<Matrix> a1;
    for (int a = 0; a < nc; ++a) {
      const Matrix& op = model.couplings[static_cast<size_t>(a)].matrix();
      Matrix x = Matrix::Zero(d, d);
      for (const auto& [m, n] : cluster.pairs)
        x += pert.q[static_cast<size_t>(m)] * op * proj[static_cast<size_t>(n)] +
             proj[static_cast<size_t>(m)] * op * pert.q[static_cast<size_t>(n)];
      a1.push_back(std::move(x));
    }

    if (lam2 > 0.0) {
      const double w = cluster.omega;
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b) {
          const Matrix& aa = comps[static_cast<size_t>(a)];
          const Matrix& ab = comps[static_cast<size_t>(b)];
          const Matrix& a1a = a1[static_cast<size_t>(a)];
          const Matrix& a1b = a1[static_cast<size_t>(b)];
          const Matrix aa_ab = aa.adjoint() * ab;

          const double wb = bath_frequency(w);
          const double s = spectral_value(model.bath.s_shift, a, b, wb);
          const double ds = -spectral_deriv(model.bath.s_deriv, model.bath.s_shift, a, b, wb, fd_step);
          h1 += lam2 * (s * (a1a.adjoint() * ab + aa.adjoint() * a1b) + dw * ds * aa_ab);

          const double g = model.bath.gamma(a, b, wb);
          const double dg = -spectral_deriv(model.bath.gamma_deriv, model.bath.gamma, a, b, wb, fd_step);
          if (g != 0.0)
            d1 += lam2 * g *
                  (sandwich_superop(a1b, aa.adjoint()) + sandwich_superop(ab, a1a.adjoint()) -
                   0.5 * anticommutator_superop(a1a.adjoint() * ab + aa.adjoint() * a1b));
          if (dw != 0.0 && dg != 0.0)
            d1 += lam2 * dw * dg * (sandwich_superop(ab, aa.adjoint()) - 0.5 * anticommutator_superop(aa_ab));
        }
    }
    out.a1.push_back(std::move(a1));
  }

  out.h1_ls = HermitianOperator(h1);
  out.d1 = Generator::linear(d1);
  out.correction = Generator::linear(hamiltonian_superop(out.h1_ls.matrix()) + d1);
  const auto eps = epsilon(out.correction, epsilon_samples, seed);
  out.epsilon_sampled = eps.sampled;
  out.epsilon_upper = eps.upper;
  return out;
}

EpsilonEstimate epsilon(const Generator& correction, int sample_count, std::uint64_t seed) {
  const Matrix s = correction.superoperator();
  EpsilonEstimate e{0.0, 0.0};
  if (s.size() > 0) {
    if (s.rows() <= 256) {
      Eigen::JacobiSVD<Matrix> svd(s);
      e.upper = svd.singularValues()(0);
    } else {
      Eigen::BDCSVD<Matrix> svd(s);
      e.upper = svd.singularValues()(0);
    }
  }
  Rng rng(seed);
  for (int i = 0; i < sample_count; ++i) {
    const auto psi = random_pure_state(correction.dim(), rng);
    e.sampled = std::max(e.sampled, operator_norm(correction.apply(psi.projector())));
  }
  e.sampled = std::min(e.sampled, e.upper);
  return e;
}

namespace {

bool much_less(double a, double b) {
  if (a == 0.0) return true;
  if (std::isinf(b)) return std::isfinite(a);
  return a / b <= kTimescaleRatio;
}

void set_flags(TimescaleReport& r) {
  r.born_markov = much_less(r.tau_B, r.tau_R);
  r.rotating_wave = much_less(r.tau_S, r.tau_R);
  r.weak_vs_bath = much_less(r.tau_B, r.tau_V);
  r.weak_vs_system = much_less(r.tau_S, r.tau_V);
}

}  // namespace

TimescaleReport timescales(const WeakCouplingModel& model, double v, double tol_omega) {
  model.validate();
  const auto s = bohr_structure(model.h, tol_omega);
  TimescaleReport r;
  const double gap = model.h.dim() > 1 ? min_positive_gap(s.eig.values) : std::numeric_limits<double>::infinity();
  r.tau_S = 1.0 / gap;
  r.tau_V = v > 0.0 ? 1.0 / v : std::numeric_limits<double>::infinity();
  double gmax = 0.0;
  for (const auto& c : s.clusters)
    for (int a = 0; a < static_cast<int>(model.couplings.size()); ++a)
      gmax = std::max(gmax, model.bath.gamma(a, a, c.omega));
  const double rate = model.lambda * model.lambda * gmax;
  r.tau_R = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  r.tau_B = model.bath.tau_B;
  set_flags(r);
  return r;
}

Generator PerturbedProblem::first_order_perturbed() const {
  return Generator::sum({free, v * v_gen, v * correction});
}

Generator PerturbedProblem::hamiltonian_perturbed() const { return Generator::sum({free, v * v_gen}); }

PerturbedProblem make_perturbed_problem(const WeakCouplingModel& model, const HermitianOperator& v_op, double v,
                                        const ProblemOptions& opts) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("make_perturbed_problem: v must be finite and >= 0");
  if (v_op.dim() != model.h.dim()) throw DimensionMismatch("make_perturbed_problem: V dimension differs from H");
  const auto me = build_secular_me(model, opts.tol_omega);
  const auto pert = perturb_eigensystem(model.h, v_op);
  auto degeneracy = degeneracy_break_check(me, pert, opts.degeneracy_tol);
  const auto expansion = first_order_generators(model, me, pert, opts.degeneracy_tol, opts.epsilon_samples, opts.seed);

  WeakCouplingModel shifted = model;
  shifted.h = model.h + v * v_op;
  const auto rebuilt = build_secular_me_like(shifted, me.bohr);

  PerturbedProblem p{me.generator,
                     Generator::hamiltonian(v_op),
                     expansion.correction,
                     rebuilt.generator,
                     v_op,
                     v,
                     operator_norm(v_op.matrix()),
                     expansion.epsilon_sampled,
                     expansion.epsilon_upper,
                     timescales(model, v, opts.tol_omega),
                     std::move(degeneracy)};
  return p;
}

Matrix embed_operator(const Matrix& op, const std::vector<Index>& dims, size_t site) {
  if (site >= dims.size() || op.rows() != dims[site]) throw DimensionMismatch("embed_operator: bad site or dimension");
  Index left = 1;
  Index right = 1;
  for (size_t i = 0; i < site; ++i) left *= dims[i];
  for (size_t i = site + 1; i < dims.size(); ++i) right *= dims[i];
  return kron(Matrix::Identity(left, left), kron(op, Matrix::Identity(right, right)));
}

PerturbedProblem combine_local(const std::vector<PerturbedProblem>& sites, const ProblemOptions& opts) {
  if (sites.empty()) throw InvalidArgument("combine_local: no sites");
  std::vector<Index> dims;
  for (const auto& s : sites) dims.push_back(s.dim());
  const double v = sites.front().v;
  for (const auto& s : sites)
    if (s.v != v) throw InvalidArgument("combine_local: sites must share the perturbation strength v");

  std::vector<Generator> free, correction, exact;
  Index total = 1;
  for (Index d : dims) total *= d;
  Matrix v_total = Matrix::Zero(total, total);
  TimescaleReport ts;
  ts.tau_S = 0.0;
  ts.tau_R = std::numeric_limits<double>::infinity();
  ts.tau_B = 0.0;
  ts.tau_V = sites.front().timescales.tau_V;
  DegeneracyReport degeneracy;

  Index left = 1;
  for (size_t i = 0; i < sites.size(); ++i) {
    const Index right = total / (left * dims[i]);
    const auto& s = sites[i];
    free.push_back(Generator::embedded(s.free, left, right));
    correction.push_back(Generator::embedded(s.correction, left, right));
    exact.push_back(Generator::embedded(s.exact_perturbed, left, right));
    v_total += embed_operator(s.v_op.matrix(), dims, i);
    ts.tau_S = std::max(ts.tau_S, s.timescales.tau_S);
    ts.tau_R = std::min(ts.tau_R, s.timescales.tau_R);
    ts.tau_B = std::max(ts.tau_B, s.timescales.tau_B);
    if (s.degeneracy.broken) {
      degeneracy.broken = true;
      degeneracy.advisory = s.degeneracy.advisory;
      for (const auto& c : s.degeneracy.clusters) degeneracy.clusters.push_back(c);
    }
    left *= dims[i];
  }
  set_flags(ts);

  const Generator corr = Generator::linear(Generator::sum(correction).superoperator());
  const auto eps = epsilon(corr, opts.epsilon_samples, opts.seed);
  const HermitianOperator v_op(v_total);
  return PerturbedProblem{Generator::sum(free),
                          Generator::hamiltonian(v_op),
                          corr,
                          Generator::sum(exact),
                          v_op,
                          v,
                          operator_norm(v_total),
                          eps.sampled,
                          eps.upper,
                          ts,
                          std::move(degeneracy)};
}

}  // namespace qsl
