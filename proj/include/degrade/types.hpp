#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace degrade {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Error hierarchy.  Loaders and model preconditions throw; numerical
// non-convergence is reported through result flags, not exceptions.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file lacks a required column or has a malformed header.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented invariant (duplicate times, negative
/// time, NaN token, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A path reaches infinity in finite time; carries the blow-up time.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double blowup_time)
      : Error(what), blowup_time_(blowup_time) {}
  double blowup_time() const { return blowup_time_; }

 private:
  double blowup_time_;
};

/// Failure inside a numerical routine (quadrature mode search, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Run configuration rejected (unknown key, conflicting model blocks, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Shared result value types.
// ---------------------------------------------------------------------------

enum class Direction { increasing, decreasing };

/// Soft-failure threshold: the level whose first crossing defines failure.
struct FailureThreshold {
  Real value = 0.0;
  Direction direction = Direction::increasing;
};

/// Failure-time CDF on a time grid with optional pointwise bounds.
struct CdfCurve {
  Vector times;
  Vector cdf;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
  Real level = 0.0;  // confidence/credible level of the bounds, 0 when absent
};

/// Estimates and inference metadata for any fitted model.
struct FitResult {
  std::vector<std::string> param_names;
  Vector estimates;
  Vector std_errors;
  Matrix covariance;  // inverse observed information, natural scale
  Real loglik = 0.0;
  Real aic = 0.0;
  bool converged = false;
  int iterations = 0;
  std::uint64_t seed = 0;

  Real estimate(const std::string& name) const;
  Real std_error(const std::string& name) const;
  bool has_param(const std::string& name) const;
};

}  // namespace degrade
