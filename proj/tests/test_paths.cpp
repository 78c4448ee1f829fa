#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "degrade/paths.hpp"
#include "degrade/rng.hpp"
#include "degrade/serialize.hpp"

#include <cmath>

using namespace degrade;

namespace {

const FailureThreshold kUp{1.0, Direction::increasing};

PathModel random_increasing_path(Rng& rng, int which) {
  switch (which) {
    case 0:
      return LinearPath{rng.uniform(-1.0, 1.0), rng.uniform(0.1, 3.0)};
    case 1:
      return ParisPath{rng.uniform(0.005, 0.05), rng.uniform(0.0, 2.5),
                       rng.uniform(5.0, 12.0), rng.uniform(0.5, 2.0)};
    default:
      return LogLogisticPath{rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0),
                             rng.uniform(0.3, 3.0)};
  }
}

}  // namespace

TEST_CASE("paris evaluate matches the exponential branch") {
  const ParisPath p{0.01, 2.0, 9.0, 1.0};
  const double expected = 9.0 * std::exp(0.01 * M_PI * 10.0);
  CHECK(evaluate(p, 10.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(evaluate(p, 10.0) == doctest::Approx(12.322).epsilon(1e-3));
}

TEST_CASE("paris with theta2=0 collapses to a linear path") {
  const ParisPath p{0.7, 0.0, 3.0, 2.0};
  for (double t : {0.0, 1.0, 2.5, 10.0}) {
    CHECK(evaluate(p, t) == doctest::Approx(3.0 + 0.7 * t).epsilon(1e-12));
  }
}

TEST_CASE("paris branch continuity near theta2=2") {
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    ParisPath p{rng.uniform(0.005, 0.05), 2.0, rng.uniform(5.0, 12.0),
                rng.uniform(0.5, 1.5)};
    const double t = rng.uniform(0.1, 20.0);
    const double exact = evaluate(p, t);
    for (double eps : {1e-6, -1e-6}) {
      ParisPath q = p;
      q.theta2 = 2.0 + eps;
      CHECK(evaluate(q, t) == doctest::Approx(exact).epsilon(1e-4));
    }
  }
}

TEST_CASE("paris blow-up carries the singular time") {
  const ParisPath p{0.1, 3.0, 9.0, 1.0};
  const double tstar = paris_blowup_time(p).value();
  CHECK(std::isfinite(evaluate(p, 0.99 * tstar)));
  try {
    evaluate(p, 1.01 * tstar);
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    CHECK(e.blowup_time() == doctest::Approx(tstar).epsilon(1e-12));
  }
}

TEST_CASE("log-logistic half-asymptote at t=scale") {
  const LogLogisticPath p{2.4, 1.7, 0.8};
  CHECK(evaluate(p, 1.7) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(evaluate(p, 0.0) == 0.0);
}

TEST_CASE("device-b starts at zero and tends to -exp(beta2)") {
  const DeviceBPath p{-1.0, 0.4, 0.7, 24.79, 27.0};
  CHECK(evaluate(p, 0.0) == 0.0);
  CHECK(evaluate(p, 1e9) == doctest::Approx(-std::exp(0.4)).epsilon(1e-9));
}

TEST_CASE("cumulative exposure with constant history is linear") {
  CovariateHistory h{"u", "uv", {0.0, 5.0, 10.0}, {2.0, 2.0, 2.0}};
  CumulativeExposurePath p;
  p.beta0 = 0.3;
  p.effects = {CovariateEffect{CovariateEffect::Kind::power, 0.5, 2.0}};
  p.histories = {h};
  const double f_c = 0.5 * 4.0;  // f(2) = 0.5 * 2^2
  for (double t : {0.0, 1.0, 3.7, 10.0}) {
    CHECK(evaluate(p, t) == doctest::Approx(0.3 + t * f_c).epsilon(1e-12));
  }
  CHECK_THROWS_AS(evaluate(p, 11.0), ValidationError);
}

TEST_CASE("cumulative exposure trapezoid on a ramp") {
  // f(x) = x with history x(t) = t gives integral t^2/2.
  CovariateHistory h{"u", "load", {0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 1.0, 2.0, 3.0, 4.0}};
  CumulativeExposurePath p;
  p.beta0 = 0.0;
  p.effects = {CovariateEffect{CovariateEffect::Kind::linear, 1.0, 1.0}};
  p.histories = {h};
  CHECK(evaluate(p, 4.0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(evaluate(p, 2.5) == doctest::Approx(3.125).epsilon(1e-12));
}

TEST_CASE("first crossing: linear") {
  CHECK(first_crossing_time(LinearPath{0.0, 2.0}, kUp).value() ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(first_crossing_time(LinearPath{0.0, -1.0}, kUp), DomainError);
  // already past threshold at t=0
  CHECK(first_crossing_time(LinearPath{2.0, 1.0}, kUp).value() == 0.0);
}

TEST_CASE("first crossing: device-b none when asymptote above threshold") {
  const DeviceBPath p{-1.0, 0.4, 0.7, 24.79, 27.0};
  // |D| sup = exp(0.4) ~ 1.49; threshold deeper than that is never reached
  CHECK(!first_crossing_time(p, {-2.0, Direction::decreasing}).has_value());
  const auto t = first_crossing_time(p, {-1.0, Direction::decreasing});
  REQUIRE(t.has_value());
  CHECK(evaluate(p, *t) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("first crossing: paris inverse of evaluate") {
  const ParisPath p{0.01, 2.0, 9.0, 1.0};
  const double d10 = evaluate(p, 10.0);
  const auto t = first_crossing_time(p, {d10, Direction::increasing});
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("first crossing: paris past blow-up always crosses") {
  const ParisPath p{0.1, 3.0, 9.0, 1.0};
  const auto t = first_crossing_time(p, {1e6, Direction::increasing});
  REQUIRE(t.has_value());
  CHECK(*t < paris_blowup_time(p).value());
}

TEST_CASE("first crossing: log-logistic and coating") {
  const LogLogisticPath ll{2.0, 1.5, 0.7};
  const auto t = first_crossing_time(ll, kUp);
  REQUIRE(t.has_value());
  CHECK(evaluate(ll, *t) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(!first_crossing_time(ll, {2.5, Direction::increasing}).has_value());

  CoatingPath c;
  c.asymptote = -2.0;
  c.mu = 4.0;
  c.gamma = 0.8;
  c.w = 0.1;
  const auto tc = first_crossing_time(c, {-1.0, Direction::decreasing});
  REQUIRE(tc.has_value());
  CHECK(evaluate(c, *tc) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(!first_crossing_time(c, {-3.0, Direction::decreasing}).has_value());
}

TEST_CASE("property: monotone in t and crossing consistency") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const PathModel path = random_increasing_path(rng, i % 3);
    double t1 = rng.uniform(0.0, 20.0);
    double t2 = rng.uniform(0.0, 20.0);
    if (t1 > t2) std::swap(t1, t2);
    try {
      const double v1 = evaluate(path, t1);
      const double v2 = evaluate(path, t2);
      CHECK(v2 >= v1 - 1e-12);

      const double level = rng.uniform(0.5, 10.0);
      const auto tc = first_crossing_time(path, {level, Direction::increasing});
      if (tc && *tc > 0.0) {
        const double v = evaluate(path, *tc);
        CHECK(v == doctest::Approx(level).epsilon(1e-8));
      }
    } catch (const SingularityError&) {
      continue;  // past a paris blow-up; monotonicity holds where defined
    }
  }
}

TEST_CASE("path json round-trip") {
  Rng rng(23);
  std::vector<PathModel> paths;
  paths.push_back(LinearPath{0.5, 1.5});
  paths.push_back(ParisPath{0.01, 1.8, 9.0, 1.1});
  paths.push_back(LogLogisticPath{-2.0, 1.0, 0.5});
  paths.push_back(DeviceBPath{-1.0, 0.4, 0.66, 24.79, 22.0});
  CoatingPath c;
  c.asymptote = -1.5;
  c.mu = 4.0;
  c.gamma = 0.9;
  c.w = 0.05;
  c.coef = Vector::Ones(2);
  c.covariates = Vector::Constant(2, 0.5);
  paths.push_back(c);
  CumulativeExposurePath ce;
  ce.beta0 = 0.2;
  ce.effects = {CovariateEffect{CovariateEffect::Kind::exponential, 0.1, 0.4}};
  ce.histories = {CovariateHistory{"u", "uv", {0.0, 1.0, 2.0}, {1.0, 1.4, 0.9}}};
  paths.push_back(ce);

  for (const auto& p : paths) {
    const auto j = path_to_json(p);
    const PathModel q = path_from_json(j);
    CHECK(std::string(family_name(p)) == family_name(q));
    for (int i = 0; i < 10; ++i) {
      const double t = rng.uniform(0.0, 2.0);
      CHECK(evaluate(p, t) == doctest::Approx(evaluate(q, t)).epsilon(1e-14));
    }
  }
}
