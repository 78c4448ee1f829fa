#pragma once

// Mixed-effects general path models: marginal likelihood by adaptive
// Gauss-Hermite quadrature with per-unit mode/curvature recentering, maximum
// likelihood fitting, and the induced failure-time CDF with bootstrap
// intervals.

#include "degrade/data.hpp"
#include "degrade/optimize.hpp"
#include "degrade/paths.hpp"
#include "degrade/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace degrade {

enum class GpmFamily { linear, paris, log_logistic, device_b };

GpmFamily gpm_family_from_name(const std::string& name);
const char* gpm_family_name(GpmFamily family);

/// How a Gaussian random effect enters the path parameter: directly, or
/// through exp() so the parameter itself is lognormal.
enum class RandomLink { identity, log_link };

struct RandomParam {
  std::string name;
  RandomLink link = RandomLink::identity;
};

/// Maps a static covariate (e.g. temperature in Celsius) to the transformed
/// stress consumed by the path family.
struct GpmAccelerator {
  std::string covariate;
  ArrheniusSign sign = ArrheniusSign::positive;
};

struct GpmModelSpec {
  GpmFamily family = GpmFamily::linear;
  std::vector<std::string> fixed_params;
  std::vector<RandomParam> random_params;
  std::optional<GpmAccelerator> accelerator;
  double error_sd = 0.1;  // sigma_eps; also the simulation truth default

  // Family constants (not estimated).
  double paris_initial = 9.0;
  double paris_stress = 1.0;
  double device_baseline_x = 0.0;

  int quadrature_order = 15;
};

/// Parameter names in canonical reporting order: fixed effects, random-effect
/// means (mu_*), SDs (sigma_*), correlations (rho_*_*), then sigma_eps.
std::vector<std::string> gpm_param_names(const GpmModelSpec& spec);

/// Marginal log-likelihood of the natural-scale parameter vector theta
/// (canonical order): sum over units of the log of the random-effects
/// integral, each integral computed by adaptive Gauss-Hermite quadrature.
double marginal_log_likelihood(const GpmModelSpec& spec, const Vector& theta,
                               const RmdtDataset& data, int quadrature_order = 0);

struct GpmFitOptions {
  OptimOptions optim;
  std::optional<Vector> init;  // natural scale; heuristic start when absent
  int quadrature_order = 0;    // 0 = spec value
};

FitResult fit_gpm(const GpmModelSpec& spec, const RmdtDataset& data,
                  const GpmFitOptions& options = {});

/// Heuristic natural-scale starting values derived from per-unit regressions.
Vector gpm_initial_guess(const GpmModelSpec& spec, const RmdtDataset& data);

/// Closed-form CDF for the linear path with fixed intercept alpha and
/// lognormal rate: F(t) = Phi{ [log t - (log(D0 - alpha) - mu)] / sigma }.
CdfCurve failure_cdf_linear(double alpha, double mu, double sigma,
                            double threshold, const Vector& times);

/// Monte Carlo failure CDF: draw random effects from the fitted Gaussian,
/// record each path's crossing time, count crossings per grid time.
/// Deterministic for fixed (seed, draws) at any thread count.
CdfCurve failure_cdf_mc(const GpmModelSpec& spec, const Vector& theta,
                        const FailureThreshold& threshold, const Vector& times,
                        std::int64_t draws, std::uint64_t seed,
                        const std::map<std::string, double>& covariates = {},
                        int threads = 1);

struct BootstrapCdf {
  CdfCurve curve;
  int replicates = 0;
  int dropped = 0;
  bool degraded = false;  // more than 20% of replicates dropped
};

struct BootstrapOptions {
  int replicates = 200;
  double level = 0.9;
  std::uint64_t seed = 0;
  int threads = 1;
  std::int64_t mc_draws = 20000;  // per replicate when no closed form applies
  GpmFitOptions refit;
};

/// Parametric bootstrap: simulate from the fitted model at the observed
/// design, refit, evaluate F(t); percentile intervals across replicates.
BootstrapCdf bootstrap_ci(const FitResult& fit, const GpmModelSpec& spec,
                          const RmdtDataset& data,
                          const FailureThreshold& threshold, const Vector& times,
                          const BootstrapOptions& options,
                          const std::map<std::string, double>& covariates = {});

/// Observation design for simulation: per-unit times plus static covariates.
struct GpmDesign {
  std::vector<std::vector<double>> times;
  std::vector<std::map<std::string, double>> covariates;  // empty = none

  static GpmDesign balanced(int units, const std::vector<double>& times);
  static GpmDesign from_dataset(const RmdtDataset& data);
};

RmdtDataset simulate_rmdt(const GpmModelSpec& spec, const Vector& truth,
                          const GpmDesign& design, std::uint64_t seed);

/// Crossing time of one realized path toward the threshold, +infinity when it
/// never crosses (wrong-direction realizations included).
double realized_crossing_time(const PathModel& path,
                              const FailureThreshold& threshold);

}  // namespace degrade
