#include "degrade/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace degrade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_time(double t) {
  if (t < 0.0 || !std::isfinite(t)) {
    throw DomainError("path evaluation time must be finite and nonnegative");
  }
}

double eval_linear(const LinearPath& p, double t) {
  return p.intercept + p.slope * t;
}

void validate(const ParisPath& p) {
  if (!(p.theta1 > 0.0)) throw DomainError("paris: theta1 must be positive");
  if (!(p.initial > 0.0)) throw DomainError("paris: initial level must be positive");
  if (!(p.stress > 0.0)) throw DomainError("paris: stress must be positive");
}

double eval_paris(const ParisPath& p, double t) {
  validate(p);
  const double c = std::pow(p.stress * std::sqrt(M_PI), p.theta2) * p.theta1;
  if (p.theta2 == 2.0) {
    return p.initial * std::exp(c * t);
  }
  const double power = 1.0 - 0.5 * p.theta2;
  const double base = std::pow(p.initial, power) + power * c * t;
  if (p.theta2 > 2.0 && base <= 0.0) {
    const double blowup = paris_blowup_time(p).value();
    throw SingularityError(
        "paris path blows up at t = " + std::to_string(blowup), blowup);
  }
  return std::pow(base, 1.0 / power);
}

void validate(const LogLogisticPath& p) {
  if (!(p.scale > 0.0)) throw DomainError("log-logistic: scale must be positive");
  if (!(p.shape > 0.0)) throw DomainError("log-logistic: shape must be positive");
}

double eval_log_logistic(const LogLogisticPath& p, double t) {
  validate(p);
  if (t == 0.0) return 0.0;
  return p.asymptote / (1.0 + std::pow(t / p.scale, -1.0 / p.shape));
}

double device_b_rate(const DeviceBPath& p) {
  return std::exp(p.beta1) * std::exp(p.activation * (p.baseline_x - p.x));
}

double eval_device_b(const DeviceBPath& p, double t) {
  return -std::exp(p.beta2) * (1.0 - std::exp(-device_b_rate(p) * t));
}

void validate(const CoatingPath& p) {
  if (!(p.asymptote < 0.0)) throw DomainError("coating: asymptote must be negative");
  if (!(p.gamma > 0.0)) throw DomainError("coating: gamma must be positive");
  if (p.coef.size() != p.covariates.size()) {
    throw DomainError("coating: coefficient/covariate length mismatch");
  }
}

double coating_location(const CoatingPath& p) {
  return p.mu + (p.coef.size() ? p.coef.dot(p.covariates) : 0.0);
}

double eval_coating(const CoatingPath& p, double t) {
  validate(p);
  if (t == 0.0) return 0.0;
  const double z = -(std::log(t) - coating_location(p)) / p.gamma;
  return p.asymptote * std::exp(p.w) / (1.0 + std::exp(z));
}

double interpolate(const CovariateHistory& h, double t) {
  const auto it = std::lower_bound(h.times.begin(), h.times.end(), t);
  if (it == h.times.begin()) return h.values.front();
  if (it == h.times.end()) return h.values.back();
  const std::size_t j = static_cast<std::size_t>(it - h.times.begin());
  const double w = (t - h.times[j - 1]) / (h.times[j] - h.times[j - 1]);
  return (1.0 - w) * h.values[j - 1] + w * h.values[j];
}

double eval_cumulative(const CumulativeExposurePath& p, double t) {
  if (p.effects.size() != p.histories.size()) {
    throw DomainError("cumulative exposure: effect/history count mismatch");
  }
  double total = p.beta0 + p.unit_shift;
  for (std::size_t l = 0; l < p.histories.size(); ++l) {
    const auto& h = p.histories[l];
    const auto& f = p.effects[l];
    if (h.times.empty() || h.times.front() > 0.0 || h.times.back() < t) {
      throw ValidationError("covariate history '" + h.name +
                            "' does not cover [0, t]");
    }
    double integral = 0.0;
    double prev_t = 0.0;
    double prev_f = f(interpolate(h, 0.0));
    for (std::size_t k = 0; k < h.times.size() && h.times[k] <= t; ++k) {
      if (h.times[k] <= prev_t) continue;
      const double fk = f(h.values[k]);
      integral += 0.5 * (prev_f + fk) * (h.times[k] - prev_t);
      prev_t = h.times[k];
      prev_f = fk;
    }
    if (prev_t < t) {
      const double ft = f(interpolate(h, t));
      integral += 0.5 * (prev_f + ft) * (t - prev_t);
    }
    total += integral;
  }
  return total;
}

}  // namespace

double CovariateEffect::operator()(double x) const {
  switch (kind) {
    case Kind::linear:
      return coef * x;
    case Kind::power:
      return coef * std::pow(x, exponent);
    case Kind::exponential:
      return coef * std::exp(exponent * x);
  }
  throw DomainError("unknown covariate effect kind");
}

double evaluate(const PathModel& path, double t) {
  check_time(t);
  return std::visit(
      [t](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearPath>) return eval_linear(p, t);
        if constexpr (std::is_same_v<T, ParisPath>) return eval_paris(p, t);
        if constexpr (std::is_same_v<T, LogLogisticPath>) return eval_log_logistic(p, t);
        if constexpr (std::is_same_v<T, DeviceBPath>) return eval_device_b(p, t);
        if constexpr (std::is_same_v<T, CoatingPath>) return eval_coating(p, t);
        if constexpr (std::is_same_v<T, CumulativeExposurePath>) return eval_cumulative(p, t);
      },
      path);
}

std::optional<double> paris_blowup_time(const ParisPath& p) {
  validate(p);
  if (p.theta2 <= 2.0) return std::nullopt;
  const double c = std::pow(p.stress * std::sqrt(M_PI), p.theta2) * p.theta1;
  const double power = 1.0 - 0.5 * p.theta2;  // negative here
  return std::pow(p.initial, power) / (-power * c);
}

const char* family_name(const PathModel& path) {
  struct Visitor {
    const char* operator()(const LinearPath&) const { return "linear"; }
    const char* operator()(const ParisPath&) const { return "paris"; }
    const char* operator()(const LogLogisticPath&) const { return "log_logistic"; }
    const char* operator()(const DeviceBPath&) const { return "device_b"; }
    const char* operator()(const CoatingPath&) const { return "coating"; }
    const char* operator()(const CumulativeExposurePath&) const {
      return "cumulative_exposure";
    }
  };
  return std::visit(Visitor{}, path);
}

namespace {

// Canonical orientation: sign * D(t) is nondecreasing and we look for the
// first time it reaches sign * threshold.
struct CrossingProblem {
  double sign;
  double level;
};

// Bracketed bisection on the predicate "canonical path >= level or past a
// blow-up", followed by a few secant refinements.  A Paris blow-up implies
// the crossing happened earlier, so a singular evaluation counts as "above".
std::optional<double> bisect_crossing(const PathModel& path,
                                      const CrossingProblem& prob,
                                      double t_cap) {
  const auto value = [&](double t) -> double {
    try {
      return prob.sign * evaluate(path, t);
    } catch (const SingularityError&) {
      return kInf;
    }
  };
  if (value(0.0) >= prob.level) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi <= t_cap && value(hi) < prob.level) {
    lo = hi;
    hi *= 2.0;
  }
  if (hi > t_cap) {
    if (t_cap == kInf || value(t_cap) < prob.level) return std::nullopt;
    hi = t_cap;
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-10 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) >= prob.level ? hi : lo) = mid;
  }
  // Secant polish on D(t) - level; keep the best finite iterate in-bracket.
  double best_t = hi;
  double best_f = std::abs(value(hi) - prob.level);
  double a = lo, b = hi;
  double fa = value(a) - prob.level, fb = value(b) - prob.level;
  for (int i = 0; i < 5 && std::isfinite(fa) && std::isfinite(fb) && fb != fa; ++i) {
    const double c = b - fb * (b - a) / (fb - fa);
    if (!(c >= lo && c <= hi)) break;
    const double fc = value(c) - prob.level;
    if (std::isfinite(fc) && std::abs(fc) < best_f) {
      best_f = std::abs(fc);
      best_t = c;
    }
    a = b;
    fa = fb;
    b = c;
    fb = fc;
  }
  return best_t;
}

std::optional<double> crossing_linear(const LinearPath& p, Direction dir,
                                      double level) {
  if (dir == Direction::increasing && !(p.slope > 0.0)) {
    throw DomainError("linear path is not increasing (slope <= 0)");
  }
  if (dir == Direction::decreasing && !(p.slope < 0.0)) {
    throw DomainError("linear path is not decreasing (slope >= 0)");
  }
  const double t = (level - p.intercept) / p.slope;
  return std::max(0.0, t);
}

std::optional<double> crossing_log_logistic(const LogLogisticPath& p,
                                            Direction dir, double level) {
  validate(p);
  if (dir == Direction::increasing ? !(p.asymptote > 0.0) : !(p.asymptote < 0.0)) {
    throw DomainError("log-logistic asymptote sign inconsistent with threshold direction");
  }
  const double sign = dir == Direction::increasing ? 1.0 : -1.0;
  if (sign * level <= 0.0) return 0.0;  // starts at threshold or beyond
  if (sign * level >= sign * p.asymptote) return std::nullopt;
  return p.scale * std::pow(p.asymptote / level - 1.0, -p.shape);
}

std::optional<double> crossing_device_b(const DeviceBPath& p, Direction dir,
                                        double level) {
  if (dir != Direction::decreasing) {
    throw DomainError("device-b path is decreasing; threshold direction must match");
  }
  if (level >= 0.0) return 0.0;
  if (level <= -std::exp(p.beta2)) return std::nullopt;
  return -std::log1p(level * std::exp(-p.beta2)) / device_b_rate(p);
}

std::optional<double> crossing_coating(const CoatingPath& p, Direction dir,
                                       double level) {
  validate(p);
  if (dir != Direction::decreasing) {
    throw DomainError("coating path is decreasing; threshold direction must match");
  }
  if (level >= 0.0) return 0.0;
  const double c = p.asymptote * std::exp(p.w) / level - 1.0;
  if (c <= 0.0) return std::nullopt;
  return std::exp(coating_location(p) - p.gamma * std::log(c));
}

}  // namespace

std::optional<double> first_crossing_time(const PathModel& path,
                                          const FailureThreshold& threshold) {
  const Direction dir = threshold.direction;
  const double level = threshold.value;
  if (const auto* p = std::get_if<LinearPath>(&path)) {
    return crossing_linear(*p, dir, level);
  }
  if (const auto* p = std::get_if<LogLogisticPath>(&path)) {
    return crossing_log_logistic(*p, dir, level);
  }
  if (const auto* p = std::get_if<DeviceBPath>(&path)) {
    return crossing_device_b(*p, dir, level);
  }
  if (const auto* p = std::get_if<CoatingPath>(&path)) {
    return crossing_coating(*p, dir, level);
  }
  if (const auto* p = std::get_if<ParisPath>(&path)) {
    validate(*p);
    if (dir != Direction::increasing) {
      throw DomainError("paris path is increasing; threshold direction must match");
    }
    return bisect_crossing(path, {1.0, level}, 1e300);
  }
  const auto& ce = std::get<CumulativeExposurePath>(path);
  double t_cap = kInf;
  for (const auto& h : ce.histories) {
    if (h.times.empty()) throw ValidationError("empty covariate history");
    t_cap = std::min(t_cap, h.times.back());
  }
  const double sign = dir == Direction::increasing ? 1.0 : -1.0;
  return bisect_crossing(path, {sign, sign * level}, t_cap);
}

}  // namespace degrade
