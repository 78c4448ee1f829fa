#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "degrade/optimize.hpp"
#include "degrade/quadrature.hpp"
#include "degrade/rng.hpp"
#include "degrade/special.hpp"

#include <cmath>

using namespace degrade;

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
}

TEST_CASE("log normal cdf deep tail") {
  // Continuity across the asymptotic switch and agreement in the bulk.
  CHECK(log_normal_cdf(-9.9) == doctest::Approx(std::log(normal_cdf(-9.9))).epsilon(1e-10));
  const double a = log_normal_cdf(-10.0 - 1e-9);
  const double b = log_normal_cdf(-10.0 + 1e-9);
  CHECK(a == doctest::Approx(b).epsilon(1e-6));
  // Tail values stay finite far beyond erfc underflow.
  CHECK(std::isfinite(log_normal_cdf(-60.0)));
  CHECK(log_normal_cdf(-60.0) < -1000.0);
}

TEST_CASE("regularized incomplete gamma") {
  // Shape 1 reduces to the exponential distribution.
  for (double x : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-13));
  }
  // Shape 1/2 relates to erf.
  for (double x : {0.2, 1.0, 4.0}) {
    CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
  }
  CHECK(gamma_p(3.0, 0.0) == 0.0);
  CHECK(gamma_q(2.5, 1.0) == doctest::Approx(1.0 - gamma_p(2.5, 1.0)).epsilon(1e-13));
  CHECK_THROWS_AS(gamma_p(-1.0, 1.0), DomainError);
}

TEST_CASE("inverse gaussian cdf closed form") {
  // IG(1,1) at its mean: Phi(0) + e^2 Phi(-2).
  const double expected = 0.5 + std::exp(2.0) * normal_cdf(-2.0);
  CHECK(inverse_gaussian_cdf(1.0, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(inverse_gaussian_cdf(1.0, 1.0, 1.0) == doctest::Approx(0.66810).epsilon(2e-5));
  CHECK(inverse_gaussian_cdf(0.0, 1.0, 1.0) == 0.0);
  // Large shape/mean ratios must not overflow.
  CHECK(inverse_gaussian_cdf(900.0, 1000.0, 4e6) ==
        doctest::Approx(inverse_gaussian_cdf(900.0, 1000.0, 4e6)));
  CHECK(std::isfinite(inverse_gaussian_cdf(900.0, 1000.0, 4e6)));
  // CDF is monotone in x.
  double prev = 0.0;
  for (double x = 0.1; x < 5.0; x += 0.1) {
    const double cur = inverse_gaussian_cdf(x, 1.0, 2.0);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("inverse gaussian pdf at the mean") {
  CHECK(inverse_gaussian_logpdf(1.0, 1.0, 1.0) ==
        doctest::Approx(-0.918938533204673).epsilon(1e-12));
}

TEST_CASE("gauss hermite rules integrate exactly") {
  for (int order : {5, 15, 31}) {
    const auto rule = gauss_hermite(order);
    CHECK(rule.weights.sum() == doctest::Approx(kSqrtPi).epsilon(1e-13));
    // integral of x^2 exp(-x^2) = sqrt(pi)/2
    double m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < order; ++i) {
      m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
      m4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    }
    CHECK(m2 == doctest::Approx(kSqrtPi / 2.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(0.75 * kSqrtPi).epsilon(1e-12));
  }
}

TEST_CASE("rng determinism and stream independence") {
  Rng a = Rng::stream(42, "test", 0);
  Rng b = Rng::stream(42, "test", 0);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c = Rng::stream(42, "test", 1);
  bool differs = false;
  Rng a2 = Rng::stream(42, "test", 0);
  for (int i = 0; i < 10; ++i) differs = differs || (a2.uniform() != c.uniform());
  CHECK(differs);
}

TEST_CASE("sampler moments") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));

  // Gamma(shape, scale): mean = shape*scale, var = shape*scale^2.
  for (double shape : {0.4, 2.5}) {
    double gs = 0.0, gs2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape, 1.5);
      gs += g;
      gs2 += g * g;
    }
    const double mean = gs / n;
    const double var = gs2 / n - mean * mean;
    CHECK(mean == doctest::Approx(shape * 1.5).epsilon(0.03));
    CHECK(var == doctest::Approx(shape * 2.25).epsilon(0.06));
  }

  // Inverse Gaussian(mean, shape): var = mean^3/shape.
  double is = 0.0, is2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.inverse_gaussian(2.0, 8.0);
    is += v;
    is2 += v * v;
  }
  const double imean = is / n;
  CHECK(imean == doctest::Approx(2.0).epsilon(0.02));
  CHECK(is2 / n - imean * imean == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("inverse gaussian sampler matches closed-form cdf") {
  Rng rng(99);
  const int n = 100000;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    if (rng.inverse_gaussian(1.0, 1.0) <= 1.0) ++below;
  }
  CHECK(static_cast<double>(below) / n == doctest::Approx(0.66810).epsilon(0.01));
}

TEST_CASE("minimize quadratic and rosenbrock") {
  OptimOptions opts;
  opts.restarts = 2;

  const Objective quad = [](const Vector& x) {
    return (x[0] - 3.0) * (x[0] - 3.0) + 2.0 * (x[1] + 1.0) * (x[1] + 1.0);
  };
  Vector x0 = Vector::Zero(2);
  const auto res = minimize(quad, x0, opts);
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(res.x[1] == doctest::Approx(-1.0).epsilon(1e-5));

  const Objective rosen = [](const Vector& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  const auto res2 = minimize(rosen, x0, opts);
  CHECK(res2.fmin < 1e-8);
  CHECK(res2.x[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("fd derivatives") {
  const Objective f = [](const Vector& x) {
    return std::sin(x[0]) + x[0] * x[1] * x[1];
  };
  Vector x(2);
  x << 0.3, -0.7;
  const Vector g = fd_gradient(f, x);
  CHECK(g[0] == doctest::Approx(std::cos(0.3) + 0.49).epsilon(1e-7));
  CHECK(g[1] == doctest::Approx(0.3 * 2.0 * -0.7).epsilon(1e-7));
  const Matrix h = fd_hessian(f, x);
  CHECK(h(0, 0) == doctest::Approx(-std::sin(0.3)).epsilon(1e-4));
  CHECK(h(0, 1) == doctest::Approx(-1.4).epsilon(1e-4));
  CHECK(h(1, 1) == doctest::Approx(0.6).epsilon(1e-4));
}

TEST_CASE("log_sum_exp") {
  Vector v(3);
  v << 1000.0, 1000.0, 1000.0;
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(3.0)).epsilon(1e-12));
}
