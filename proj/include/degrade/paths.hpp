#pragma once

// Parametric degradation-path families and first-crossing solvers.  Paths are
// immutable value types; evaluation is pure.

#include "degrade/data.hpp"
#include "degrade/types.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace degrade {

/// D(t) = intercept + slope * t.
struct LinearPath {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Crack-growth law with stress intensity range x*sqrt(pi*D):
///   theta2 != 2: D(t) = [D0^(1-theta2/2) + (1-theta2/2) theta1 (x sqrt(pi))^theta2 t]^(2/(2-theta2))
///   theta2 == 2: D(t) = D0 exp(theta1 pi x^2 t)
/// For theta2 > 2 the path blows up in finite time.
struct ParisPath {
  double theta1 = 0.0;   // > 0
  double theta2 = 0.0;
  double initial = 0.0;  // D(0) > 0
  double stress = 1.0;   // x > 0
};

/// D(t) = asymptote / (1 + (t/scale)^(-1/shape)); concave or S-shaped.
struct LogLogisticPath {
  double asymptote = 0.0;
  double scale = 0.0;  // > 0
  double shape = 0.0;  // > 0
};

/// Power-drop model, decreasing from 0 toward -exp(beta2):
///   D(t) = -exp(beta2) (1 - exp{-exp(beta1) exp[activation (baseline_x - x)] t})
struct DeviceBPath {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double activation = 0.0;
  double baseline_x = 0.0;
  double x = 0.0;
};

/// Reparameterized log-logistic for chemical degradation, decreasing from 0
/// toward asymptote*exp(w) (asymptote < 0):
///   D(t) = asymptote exp(w) / (1 + exp[-(log t - (mu + coef'covariates))/gamma])
struct CoatingPath {
  double asymptote = 0.0;  // < 0
  double mu = 0.0;
  Vector coef;
  double gamma = 0.0;  // > 0
  double w = 0.0;
  Vector covariates;
};

/// Parametric effect f(x) of one dynamic covariate.
struct CovariateEffect {
  enum class Kind { linear, power, exponential };
  Kind kind = Kind::linear;
  double coef = 0.0;
  double exponent = 1.0;

  double operator()(double x) const;
};

/// D(t) = beta0 + sum_l integral_0^t f_l[x_l(tau)] dtau + unit_shift, with the
/// integrals taken by the trapezoid rule on each covariate history grid.
struct CumulativeExposurePath {
  double beta0 = 0.0;
  std::vector<CovariateEffect> effects;
  std::vector<CovariateHistory> histories;
  double unit_shift = 0.0;
};

using PathModel = std::variant<LinearPath, ParisPath, LogLogisticPath,
                               DeviceBPath, CoatingPath, CumulativeExposurePath>;

/// D(t) for the given variant.  Throws SingularityError past a Paris blow-up
/// and ValidationError outside a covariate history's coverage.
double evaluate(const PathModel& path, double t);

/// Finite-time blow-up point of a Paris path with theta2 > 2, if any.
std::optional<double> paris_blowup_time(const ParisPath& path);

/// First time the path crosses the threshold in its direction, nullopt when
/// the path's supremum (or infimum) never reaches it.  Analytic for linear,
/// log-logistic, device-b and coating; bracketed bisection otherwise.
std::optional<double> first_crossing_time(const PathModel& path,
                                          const FailureThreshold& threshold);

const char* family_name(const PathModel& path);

}  // namespace degrade
