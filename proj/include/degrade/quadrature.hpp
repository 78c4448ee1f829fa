#pragma once

#include "degrade/types.hpp"

namespace degrade {

/// Gauss-Hermite rule for integrals against exp(-x^2) on the real line.
struct GaussHermiteRule {
  Vector nodes;
  Vector weights;
  Vector log_weights;
};

/// Golub-Welsch construction from the Jacobi matrix of the (physicists')
/// Hermite polynomials.  Exact for polynomial integrands up to degree 2n-1.
GaussHermiteRule gauss_hermite(int order);

}  // namespace degrade
