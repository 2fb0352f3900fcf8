#pragma once

#include <cmath>
#include <complex>

#include "doctest.h"
#include "qsl/quantum_state.hpp"
#include "qsl/random.hpp"

namespace testing {

using namespace qsl;

inline Vector ket(std::initializer_list<Complex> amps) {
  Vector v(static_cast<Index>(amps.size()));
  Index i = 0;
  for (auto a : amps) v(i++) = a;
  return v;
}

inline DensityMatrix pure(std::initializer_list<Complex> amps) { return DensityMatrix(PureState::normalized(ket(amps))); }

inline Matrix diag(std::initializer_list<double> d) {
  Matrix m = Matrix::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
  Index i = 0;
  for (double x : d) m(i, i) = x, ++i;
  return m;
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Matrix x1() { return kron(pauli_x(), identity(2)); }
inline Matrix x2() { return kron(identity(2), pauli_x()); }
inline Matrix z1() { return kron(pauli_z(), identity(2)); }
inline Matrix z2() { return kron(identity(2), pauli_z()); }

}  // namespace testing
