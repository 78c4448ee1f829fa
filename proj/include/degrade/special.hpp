#pragma once

// Scalar special functions used across the likelihoods: normal distribution,
// regularized incomplete gamma, gamma and inverse Gaussian densities/CDFs.
// All free functions, templated on the scalar type.

#include "degrade/types.hpp"

#include <cmath>
#include <limits>

namespace degrade {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kSqrtTwo = 1.4142135623730950488;
inline constexpr double kSqrtPi = 1.7724538509055160273;

template <class S>
S normal_pdf(S x) {
  return std::exp(S(-0.5) * x * x - S(0.5) * S(kLogTwoPi));
}

template <class S>
S normal_logpdf(S x, S mean, S sd) {
  const S z = (x - mean) / sd;
  return S(-0.5) * z * z - S(0.5) * S(kLogTwoPi) - std::log(sd);
}

template <class S>
S normal_cdf(S x) {
  return S(0.5) * std::erfc(-x / S(kSqrtTwo));
}

/// log Phi(x), stable far into the lower tail where erfc underflows.
template <class S>
S log_normal_cdf(S x) {
  if (x > S(-10)) return std::log(normal_cdf(x));
  // Asymptotic expansion Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...).
  const S x2 = x * x;
  const S series = S(1) - S(1) / x2 + S(3) / (x2 * x2) - S(15) / (x2 * x2 * x2);
  return S(-0.5) * x2 - S(0.5) * S(kLogTwoPi) - std::log(-x) + std::log(series);
}

/// Inverse of the standard normal CDF (Acklam's rational approximation with
/// one Halley refinement; relative error below 1e-14 over (0,1)).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0,1)");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step on Phi(x) - p = 0.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma P(a,x), Q(a,x) = 1 - P(a,x).
// Series for x < a+1, Lentz continued fraction otherwise.
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  const double lg = a * std::log(x) - x - std::lgamma(a);
  return sum * std::exp(lg);
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double lg = a * std::log(x) - x - std::lgamma(a);
  return std::exp(lg) * h;
}

}  // namespace detail

inline double gamma_p(double a, double x) {
  if (a <= 0.0) throw DomainError("gamma_p: shape must be positive");
  if (x < 0.0) throw DomainError("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

inline double gamma_q(double a, double x) {
  if (a <= 0.0) throw DomainError("gamma_q: shape must be positive");
  if (x < 0.0) throw DomainError("gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_contfrac(a, x);
}

/// CDF of Gamma(shape, scale) at x.
inline double gamma_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return gamma_p(shape, x / scale);
}

template <class S>
S gamma_logpdf(S x, S shape, S scale) {
  if (x <= S(0)) return -std::numeric_limits<S>::infinity();
  return (shape - S(1)) * std::log(x) - x / scale - std::lgamma(shape) -
         shape * std::log(scale);
}

// ---------------------------------------------------------------------------
// Inverse Gaussian with mean m and shape lambda.
// ---------------------------------------------------------------------------

template <class S>
S inverse_gaussian_logpdf(S x, S mean, S shape) {
  if (x <= S(0)) return -std::numeric_limits<S>::infinity();
  const S r = (x - mean) / mean;
  return S(0.5) * (std::log(shape) - S(kLogTwoPi) - S(3) * std::log(x)) -
         shape * r * r / (S(2) * x);
}

/// Two-Phi closed form; the exp(2*lambda/mean) factor is kept in log space so
/// large shape/mean ratios do not overflow.
inline double inverse_gaussian_cdf(double x, double mean, double shape) {
  if (x <= 0.0) return 0.0;
  const double s = std::sqrt(shape / x);
  const double t1 = normal_cdf(s * (x / mean - 1.0));
  const double log_t2 = 2.0 * shape / mean + log_normal_cdf(-s * (x / mean + 1.0));
  const double cdf = t1 + std::exp(log_t2);
  return std::min(1.0, cdf);
}

/// log(sum(exp(v))) without overflow.
inline double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Multivariate normal log-density given the lower Cholesky factor of the
/// covariance.
inline double mvn_logpdf_chol(const Vector& x, const Vector& mean,
                              const Matrix& chol_lower) {
  const Index d = x.size();
  const Vector z =
      chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
  double log_det_half = 0.0;
  for (Index i = 0; i < d; ++i) log_det_half += std::log(chol_lower(i, i));
  return -0.5 * d * kLogTwoPi - log_det_half - 0.5 * z.squaredNorm();
}

}  // namespace degrade
