#pragma once

#include <cstdint>
#include <random>

#include "qsl/quantum_state.hpp"

namespace qsl {

using Rng = std::mt19937_64;

/// Entries drawn from the Gaussian unitary ensemble, scaled so ||H||_op = scale.
HermitianOperator random_hermitian(Index dim, Rng& rng, double scale = 1.0);
/// Haar-random unitary (QR of a Ginibre matrix with the R-diagonal phases removed).
Matrix random_unitary(Index dim, Rng& rng);
PureState random_pure_state(Index dim, Rng& rng);
/// Induced measure from a dim x rank Ginibre matrix; full rank when rank == dim.
DensityMatrix random_density_matrix(Index dim, Rng& rng, Index rank = 0);
Matrix random_ginibre(Index rows, Index cols, Rng& rng);

}  // namespace qsl
