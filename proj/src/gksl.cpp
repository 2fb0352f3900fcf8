#include "qsl/gksl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsl {

struct Generator::Node {
  Kind kind = Kind::Linear;
  Index dim = 0;
  bool time_dependent = false;

  // Gksl
  Matrix h;
  std::vector<LindbladTerm> terms;
  Matrix k;  // -iH - 1/2 sum gamma L^dagger L

  // Linear
  Matrix superop;

  // Sum
  std::vector<Generator> parts;

  // Scaled / Embedded
  Schedule schedule;
  bool constant = false;
  double coefficient = 1.0;
  std::shared_ptr<const Node> inner;
  Index left = 1;
  Index right = 1;
};

namespace {

constexpr double kProbeTol = 1e-10;

Matrix apply_node(const Generator::Node& n, const Matrix& x, double t, bool adjoint);

Matrix apply_embedded(const Generator::Node& n, const Matrix& x, double t, bool adjoint) {
  const Index s = n.inner->dim;
  const Index l = n.left;
  const Index r = n.right;
  Matrix out = Matrix::Zero(n.dim, n.dim);
  Matrix block(s, s);
  for (Index a = 0; a < l; ++a)
    for (Index b = 0; b < l; ++b)
      for (Index c = 0; c < r; ++c)
        for (Index e = 0; e < r; ++e) {
          for (Index i = 0; i < s; ++i)
            for (Index j = 0; j < s; ++j) block(i, j) = x(a * s * r + i * r + c, b * s * r + j * r + e);
          if (block.cwiseAbs().maxCoeff() == 0.0) continue;
          const Matrix y = apply_node(*n.inner, block, t, adjoint);
          for (Index i = 0; i < s; ++i)
            for (Index j = 0; j < s; ++j) out(a * s * r + i * r + c, b * s * r + j * r + e) += y(i, j);
        }
  return out;
}

Matrix apply_node(const Generator::Node& n, const Matrix& x, double t, bool adjoint) {
  switch (n.kind) {
    case Generator::Kind::Gksl: {
      Matrix out;
      if (!adjoint) {
        out = n.k * x + x * n.k.adjoint();
        for (const auto& term : n.terms) out += term.rate * (term.jump * x * term.jump.adjoint());
      } else {
        out = n.k.adjoint() * x + x * n.k;
        for (const auto& term : n.terms) out += term.rate * (term.jump.adjoint() * x * term.jump);
      }
      return out;
    }
    case Generator::Kind::Linear: {
      const Vector v = adjoint ? Vector(n.superop.adjoint() * vec(x)) : Vector(n.superop * vec(x));
      return unvec(v, n.dim);
    }
    case Generator::Kind::Sum: {
      Matrix out = Matrix::Zero(n.dim, n.dim);
      for (const auto& p : n.parts) out += adjoint ? p.adjoint_apply(x, t) : p.apply(x, t);
      return out;
    }
    case Generator::Kind::Scaled: {
      const double c = n.constant ? n.coefficient : n.schedule(t);
      if (c == 0.0) return Matrix::Zero(n.dim, n.dim);
      return c * apply_node(*n.inner, x, t, adjoint);
    }
    case Generator::Kind::Embedded:
      return apply_embedded(n, x, t, adjoint);
  }
  throw Error("Generator: unknown kind");
}

Matrix superop_by_columns(const std::function<Matrix(const Matrix&)>& f, Index d) {
  Matrix s(d * d, d * d);
  Matrix e = Matrix::Zero(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) {
      e(i, j) = 1.0;
      s.col(j * d + i) = vec(f(e));
      e(i, j) = 0.0;
    }
  return s;
}

void check_probe_basis(const Matrix& superop, Index d) {
  // Hermitian probes: E_ii, E_ij + E_ji, i(E_ij - E_ji).
  Matrix probe = Matrix::Zero(d, d);
  auto check = [&](const Matrix& x) {
    const Matrix y = unvec(superop * vec(x), d);
    const double scale = std::max(1.0, trace_norm(x));
    if (std::abs(y.trace()) > kProbeTol * scale) throw InvalidArgument("Generator::linear: map is not trace annihilating");
    if (hermiticity_defect(y) > kProbeTol * std::max(1.0, y.cwiseAbs().maxCoeff()))
      throw InvalidArgument("Generator::linear: map does not preserve Hermiticity");
  };
  for (Index i = 0; i < d; ++i)
    for (Index j = i; j < d; ++j) {
      probe.setZero();
      if (i == j) {
        probe(i, i) = 1.0;
        check(probe);
        continue;
      }
      probe(i, j) = 1.0;
      probe(j, i) = 1.0;
      check(probe);
      probe(i, j) = Complex(0, 1);
      probe(j, i) = Complex(0, -1);
      check(probe);
    }
}

Index isqrt_exact(Index n) {
  auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (r * r != n) throw DimensionMismatch("Generator::linear: superoperator size is not a square dimension");
  return r;
}

}  // namespace

Generator Generator::zero(Index dim) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Linear;
  n->dim = dim;
  n->superop = Matrix::Zero(dim * dim, dim * dim);
  return Generator(n);
}

Generator Generator::hamiltonian(const HermitianOperator& h) { return gksl(h, {}); }

Generator Generator::gksl(const HermitianOperator& h, std::vector<LindbladTerm> terms) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Gksl;
  n->dim = h.dim();
  n->h = h.matrix();
  Matrix m = Matrix::Zero(n->dim, n->dim);
  for (const auto& term : terms) {
    require_square(term.jump, "Generator::gksl");
    if (term.jump.rows() != n->dim) throw DimensionMismatch("Generator::gksl: jump operator dimension differs from H");
    if (!std::isfinite(term.rate) || term.rate < 0.0) throw InvalidArgument("Generator::gksl: rates must be >= 0");
    m += term.rate * (term.jump.adjoint() * term.jump);
  }
  n->k = Complex(0, -1) * n->h - 0.5 * m;
  n->terms = std::move(terms);
  return Generator(n);
}

Generator Generator::linear(const Matrix& superop) {
  auto g = linear_unchecked(superop);
  check_probe_basis(superop, g.dim());
  return g;
}

Generator Generator::linear_unchecked(const Matrix& superop) {
  require_square(superop, "Generator::linear");
  require_finite(superop, "Generator::linear");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Linear;
  n->dim = isqrt_exact(superop.rows());
  n->superop = superop;
  return Generator(n);
}

Generator Generator::sum(std::vector<Generator> parts) {
  if (parts.empty()) throw InvalidArgument("Generator::sum: no parts");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sum;
  n->dim = parts.front().dim();
  for (const auto& p : parts) {
    if (p.dim() != n->dim) throw DimensionMismatch("Generator::sum: parts have different dimensions");
    n->time_dependent = n->time_dependent || p.time_dependent();
  }
  n->parts = std::move(parts);
  return Generator(n);
}

Generator Generator::scaled(Schedule schedule, Generator inner) {
  if (!schedule) throw InvalidArgument("Generator::scaled: empty schedule");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Scaled;
  n->dim = inner.dim();
  n->schedule = std::move(schedule);
  n->time_dependent = true;
  n->inner = inner.node_;
  return Generator(n);
}

Generator Generator::scaled(double coefficient, Generator inner) {
  if (!std::isfinite(coefficient)) throw InvalidArgument("Generator::scaled: non-finite coefficient");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Scaled;
  n->dim = inner.dim();
  n->constant = true;
  n->coefficient = coefficient;
  n->time_dependent = inner.time_dependent();
  n->inner = inner.node_;
  return Generator(n);
}

Generator Generator::embedded(Generator inner, Index left_dim, Index right_dim) {
  if (left_dim < 1 || right_dim < 1) throw InvalidArgument("Generator::embedded: factor dimensions must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Embedded;
  n->left = left_dim;
  n->right = right_dim;
  n->dim = left_dim * inner.dim() * right_dim;
  n->time_dependent = inner.time_dependent();
  n->inner = inner.node_;
  return Generator(n);
}

Generator::Kind Generator::kind() const { return node_->kind; }
Index Generator::dim() const { return node_->dim; }
bool Generator::time_dependent() const { return node_->time_dependent; }

Matrix Generator::apply(const Matrix& x, double t) const {
  if (x.rows() != dim() || x.cols() != dim()) throw DimensionMismatch("Generator::apply: operator dimension mismatch");
  return apply_node(*node_, x, t, false);
}

Matrix Generator::adjoint_apply(const Matrix& a, double t) const {
  if (a.rows() != dim() || a.cols() != dim())
    throw DimensionMismatch("Generator::adjoint_apply: operator dimension mismatch");
  return apply_node(*node_, a, t, true);
}

Matrix Generator::superoperator(double t) const {
  const auto& n = *node_;
  switch (n.kind) {
    case Kind::Gksl: {
      Matrix s = hamiltonian_superop(n.h);
      for (const auto& term : n.terms) s += term.rate * dissipator_superop(term.jump);
      return s;
    }
    case Kind::Linear:
      return n.superop;
    case Kind::Sum: {
      Matrix s = Matrix::Zero(n.dim * n.dim, n.dim * n.dim);
      for (const auto& p : n.parts) s += p.superoperator(t);
      return s;
    }
    case Kind::Scaled: {
      const double c = n.constant ? n.coefficient : n.schedule(t);
      return c * Generator(n.inner).superoperator(t);
    }
    case Kind::Embedded:
      return superop_by_columns([&](const Matrix& x) { return apply(x, t); }, n.dim);
  }
  throw Error("Generator: unknown kind");
}

std::vector<Generator::AffineTerm> Generator::affine_terms() const {
  const auto& n = *node_;
  switch (n.kind) {
    case Kind::Gksl:
    case Kind::Linear:
      return {{nullptr, superoperator()}};
    case Kind::Sum: {
      std::vector<AffineTerm> out;
      for (const auto& p : n.parts) {
        auto sub = p.affine_terms();
        for (auto& term : sub) out.push_back(std::move(term));
      }
      return out;
    }
    case Kind::Scaled: {
      auto sub = Generator(n.inner).affine_terms();
      for (auto& term : sub) {
        if (n.constant) {
          term.superop *= n.coefficient;
        } else if (term.coefficient) {
          term.coefficient = [outer = n.schedule, in = term.coefficient](double t) { return outer(t) * in(t); };
        } else {
          term.coefficient = n.schedule;
        }
      }
      return sub;
    }
    case Kind::Embedded: {
      auto sub = Generator(n.inner).affine_terms();
      for (auto& term : sub) {
        const auto local = embedded(linear_unchecked(term.superop), n.left, n.right);
        term.superop = local.superoperator();
      }
      return sub;
    }
  }
  throw Error("Generator: unknown kind");
}

Generator Generator::operator+(const Generator& other) const { return sum({*this, other}); }

HermitianOperator adjoint_apply(const Generator& g, const HermitianOperator& a, double t) {
  return HermitianOperator::hermitian_part(g.adjoint_apply(a.matrix(), t));
}

Matrix sandwich_superop(const Matrix& a, const Matrix& b) { return kron(b.transpose(), a); }

Matrix hamiltonian_superop(const Matrix& h) {
  const Matrix id = Matrix::Identity(h.rows(), h.cols());
  return Complex(0, -1) * (kron(id, h) - kron(h.transpose(), id));
}

Matrix dissipator_superop(const Matrix& jump) {
  const Matrix id = Matrix::Identity(jump.rows(), jump.cols());
  const Matrix m = jump.adjoint() * jump;
  return kron(jump.conjugate(), jump) - 0.5 * (kron(id, m) + kron(m.transpose(), id));
}

void IntegratorConfig::validate() const {
  if (!std::isfinite(h_int) || h_int <= 0.0) throw InvalidArgument("IntegratorConfig: h_int must be > 0");
  if (output_times.empty()) throw InvalidArgument("IntegratorConfig: empty output grid");
  if (!(trace_drift_tol > 0.0)) throw InvalidArgument("IntegratorConfig: trace_drift_tol must be > 0");
  if (!(positivity_tol >= 0.0)) throw InvalidArgument("IntegratorConfig: positivity_tol must be >= 0");
  for (size_t i = 0; i < output_times.size(); ++i) {
    if (!std::isfinite(output_times[i])) throw InvalidArgument("IntegratorConfig: non-finite output time");
    if (i == 0) continue;
    const double gap = output_times[i] - output_times[i - 1];
    if (gap <= 0.0) throw InvalidArgument("IntegratorConfig: output times must be strictly increasing");
    if (h_int > gap * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "IntegratorConfig: h_int " << h_int << " exceeds output spacing " << gap;
      throw InvalidArgument(os.str());
    }
  }
}

std::vector<double> uniform_grid(double t_max, int intervals) {
  if (!(t_max > 0.0) || intervals < 1) throw InvalidArgument("uniform_grid: need t_max > 0 and intervals >= 1");
  std::vector<double> g(static_cast<size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) g[static_cast<size_t>(k)] = t_max * k / intervals;
  return g;
}

IntegratorConfig make_config(double t_max, int intervals, double h_int) {
  IntegratorConfig cfg;
  cfg.output_times = uniform_grid(t_max, intervals);
  cfg.h_int = std::min(h_int, t_max / intervals);
  return cfg;
}

namespace {

class Stepper {
 public:
  explicit Stepper(const Generator& g) : terms_(g.affine_terms()), d2_(g.dim() * g.dim()) {
    constant_ = std::all_of(terms_.begin(), terms_.end(), [](const auto& term) { return !term.coefficient; });
    if (constant_) {
      fixed_ = Matrix::Zero(d2_, d2_);
      for (const auto& term : terms_) fixed_ += term.superop;
    }
  }

  void step(Vector& x, double t, double h) {
    if (constant_) {
      if (h != cached_h_) {
        // RK4 applied to a constant linear system is this Taylor polynomial.
        const Matrix a = h * fixed_;
        Matrix p = Matrix::Identity(d2_, d2_);
        Matrix term = Matrix::Identity(d2_, d2_);
        for (int k = 1; k <= 4; ++k) {
          term = (a * term) / static_cast<double>(k);
          p += term;
        }
        propagator_ = std::move(p);
        cached_h_ = h;
      }
      x = propagator_ * x;
      return;
    }
    const Matrix s0 = at(t);
    const Matrix s1 = at(t + 0.5 * h);
    const Matrix s2 = at(t + h);
    const Vector k1 = s0 * x;
    const Vector k2 = s1 * (x + 0.5 * h * k1);
    const Vector k3 = s1 * (x + 0.5 * h * k2);
    const Vector k4 = s2 * (x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

 private:
  Matrix at(double t) const {
    Matrix s = Matrix::Zero(d2_, d2_);
    for (const auto& term : terms_) {
      const double c = term.coefficient ? term.coefficient(t) : 1.0;
      if (c != 0.0) s += c * term.superop;
    }
    return s;
  }

  std::vector<Generator::AffineTerm> terms_;
  Index d2_;
  bool constant_ = false;
  Matrix fixed_;
  Matrix propagator_;
  double cached_h_ = -1.0;
};

DensityMatrix output_state(const Vector& x, Index d, double t, double positivity_tol) {
  const Matrix m = unvec(x, d);
  const auto op = HermitianOperator::hermitian_part(m);
  const double min_eig = eig_hermitian(op).values(0);
  if (min_eig < -positivity_tol) {
    std::ostringstream os;
    os << "integrate: eigenvalue " << min_eig << " at t = " << t << "; reduce h_int";
    throw IntegrationUnstable(os.str());
  }
  return DensityMatrix(op.matrix(), positivity_tol);
}

}  // namespace

Trajectory integrate(const Generator& g, const DensityMatrix& rho0, const IntegratorConfig& cfg) {
  cfg.validate();
  if (g.dim() != rho0.dim()) throw DimensionMismatch("integrate: generator and state dimensions differ");
  const Index d = g.dim();
  Stepper stepper(g);
  Trajectory traj;
  traj.times = cfg.output_times;
  traj.states.reserve(cfg.output_times.size());
  traj.states.push_back(rho0);

  Vector x = vec(rho0.matrix());
  for (size_t k = 1; k < cfg.output_times.size(); ++k) {
    const double t0 = cfg.output_times[k - 1];
    const double span = cfg.output_times[k] - t0;
    const auto steps = static_cast<long>(std::ceil(span / cfg.h_int - 1e-9));
    const double h = span / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      stepper.step(x, t0 + static_cast<double>(s) * h, h);
      Matrix m = unvec(x, d);
      const Complex tr = m.trace();
      if (std::abs(tr - 1.0) > cfg.trace_drift_tol) {
        std::ostringstream os;
        os << "integrate: trace drift " << std::abs(tr - 1.0) << " near t = " << t0 + static_cast<double>(s + 1) * h;
        throw IntegrationUnstable(os.str());
      }
      if (cfg.hermitize_each_step) m = 0.5 * (m + m.adjoint());
      m /= m.trace();
      if (!m.allFinite()) throw IntegrationUnstable("integrate: non-finite state");
      x = vec(m);
    }
    traj.states.push_back(output_state(x, d, cfg.output_times[k], cfg.positivity_tol));
  }
  return traj;
}

std::pair<Trajectory, Trajectory> propagate_pair(const Generator& g_free, const Generator& g_pert,
                                                 const DensityMatrix& rho0, const IntegratorConfig& cfg) {
  return {integrate(g_free, rho0, cfg), integrate(g_pert, rho0, cfg)};
}

}  // namespace qsl
