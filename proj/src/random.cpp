#include "qsl/random.hpp"

#include <Eigen/QR>

namespace qsl {

Matrix random_ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  return g;
}

HermitianOperator random_hermitian(Index dim, Rng& rng, double scale) {
  const Matrix g = random_ginibre(dim, dim, rng);
  Matrix h = 0.5 * (g + g.adjoint());
  const double n = operator_norm(h);
  if (n > 0.0) h *= scale / n;
  return HermitianOperator::hermitian_part(h);
}

Matrix random_unitary(Index dim, Rng& rng) {
  const Matrix g = random_ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

PureState random_pure_state(Index dim, Rng& rng) {
  return PureState::normalized(random_ginibre(dim, 1, rng).col(0));
}

DensityMatrix random_density_matrix(Index dim, Rng& rng, Index rank) {
  if (rank <= 0 || rank > dim) rank = dim;
  const Matrix g = random_ginibre(dim, rank, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

}  // namespace qsl
