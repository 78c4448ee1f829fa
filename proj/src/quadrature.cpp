#include "degrade/quadrature.hpp"

#include "degrade/special.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace degrade {

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw DomainError("gauss_hermite: order must be >= 1");
  Matrix jacobi = Matrix::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
  GaussHermiteRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = kSqrtPi * v0 * v0;
  }
  rule.log_weights = rule.weights.array().log();
  return rule;
}

}  // namespace degrade
