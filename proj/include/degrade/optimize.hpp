#pragma once

// Derivative-free simplex search with a finite-difference quasi-Newton
// polish.  All model fits share this contract: Nelder-Mead from the supplied
// start plus random restarts, then BFGS with central-difference gradients
// from the best simplex point.

#include "degrade/types.hpp"

#include <cstdint>
#include <functional>

namespace degrade {

using Objective = std::function<double(const Vector&)>;

struct OptimOptions {
  int restarts = 5;             // start points including the supplied one
  double restart_spread = 0.3;  // relative scale of restart perturbations
  int max_iter_nm = 2000;
  double nm_tol = 1e-8;         // simplex best-value spread at convergence
  int max_iter_bfgs = 200;
  double grad_tol = 1e-4;       // gradient norm defining "converged"
  double fd_step = 1e-6;        // relative central-difference step
  std::uint64_t seed = 0;       // drives restart perturbations only
};

struct OptimResult {
  Vector x;
  double fmin = 0.0;
  bool converged = false;
  int iterations = 0;  // objective evaluations across all stages
  double grad_norm = 0.0;
  double nm_spread = 0.0;  // final simplex value spread of the best start
};

/// Minimize f.  The objective may return +inf outside its domain.
OptimResult minimize(const Objective& f, const Vector& x0,
                     const OptimOptions& options = {});

/// Central-difference gradient with per-coordinate step rel_step*max(|x|,1).
Vector fd_gradient(const Objective& f, const Vector& x, double rel_step = 1e-6);

/// Central-difference Hessian (symmetric by construction).
Matrix fd_hessian(const Objective& f, const Vector& x, double rel_step = 1e-4);

/// Jacobian of a vector map by central differences, used for delta-method
/// covariance transport between parameterizations.
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& map,
                   const Vector& x, double rel_step = 1e-6);

}  // namespace degrade
