#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "degrade/data.hpp"
#include "degrade/rng.hpp"

#include <sstream>

using namespace degrade;

TEST_CASE("load_rmdt groups and sorts") {
  std::istringstream csv(
      "unit_id,time,response\n"
      "A,1,0.1\n"
      "A,2,0.2\n"
      "A,3,0.3\n");
  const auto data = parse_rmdt(csv);
  REQUIRE(data.units.size() == 1);
  CHECK(data.units[0].size() == 3);
  CHECK(data.units[0].times == std::vector<double>{1, 2, 3});
}

TEST_CASE("load_rmdt interleaved units sorted by time") {
  std::istringstream csv(
      "unit_id,time,response\n"
      "A,2,0.2\n"
      "B,1,0.5\n"
      "A,1,0.1\n"
      "B,2,0.6\n");
  const auto data = parse_rmdt(csv);
  REQUIRE(data.units.size() == 2);
  CHECK(data.units[0].unit_id == "A");
  CHECK(data.units[0].times == std::vector<double>{1, 2});
  CHECK(data.units[0].measurements == std::vector<double>{0.1, 0.2});
  CHECK(data.units[1].times == std::vector<double>{1, 2});
}

TEST_CASE("load_rmdt schema and validation errors") {
  std::istringstream missing("unit_id,time,value\nA,1,2\n");
  CHECK_THROWS_AS(parse_rmdt(missing), SchemaError);

  std::istringstream dup(
      "unit_id,time,response\n"
      "A,1,0.1\n"
      "A,1,0.2\n");
  CHECK_THROWS_WITH_AS(parse_rmdt(dup), doctest::Contains("unit 'A'"),
                       ValidationError);

  std::istringstream nan_tok(
      "unit_id,time,response\n"
      "A,1,nan\n");
  CHECK_THROWS_AS(parse_rmdt(nan_tok), ValidationError);

  std::istringstream inf_tok(
      "unit_id,time,response\n"
      "A,1,inf\n");
  CHECK_THROWS_AS(parse_rmdt(inf_tok), ValidationError);
}

TEST_CASE("load_rmdt drops empty responses with count") {
  std::istringstream csv(
      "unit_id,time,response\n"
      "A,1,0.1\n"
      "A,2,\n"
      "A,3,0.3\n");
  LoadStats stats;
  const auto data = parse_rmdt(csv, {}, &stats);
  CHECK(stats.dropped_missing_response == 1);
  CHECK(data.units[0].size() == 2);
}

TEST_CASE("load_rmdt attaches static covariates") {
  std::istringstream csv(
      "unit_id,time,response,temp_c\n"
      "A,1,0.1,150\n"
      "A,2,0.2,150\n"
      "B,1,0.3,195\n");
  const auto data = parse_rmdt(csv);
  CHECK(data.units[0].static_covariates.at("temp_c") == 150.0);
  CHECK(data.units[1].static_covariates.at("temp_c") == 195.0);

  std::istringstream bad(
      "unit_id,time,response,temp_c\n"
      "A,1,0.1,150\n"
      "A,2,0.2,160\n");
  CHECK_THROWS_AS(parse_rmdt(bad), ValidationError);
}

TEST_CASE("load_addt baseline and batches") {
  std::ostringstream csv;
  csv << "condition_c,time,response\n";
  for (int i = 0; i < 8; ++i) csv << "25,0," << (70.0 + i) << "\n";
  csv << "50,2,65\n50,2,64\n";
  std::istringstream in(csv.str());
  const auto data = parse_addt(in);
  CHECK(data.baseline_records().size() == 8);
  // no batch column -> singleton batches, all distinct
  CHECK(data.records[0].batch_id != data.records[1].batch_id);
  // stress transform applied with the negative convention
  CHECK(data.records[0].condition ==
        doctest::Approx(-11605.0 / (25.0 + 273.15)).epsilon(1e-12));
}

TEST_CASE("load_addt rejects negative time") {
  std::istringstream csv("condition_c,time,response\n50,-1,60\n");
  CHECK_THROWS_AS(parse_addt(csv), ValidationError);
}

TEST_CASE("arrhenius transform") {
  CHECK(arrhenius_transform(195.0, ArrheniusSign::positive) ==
        doctest::Approx(24.789).epsilon(1e-4));
  CHECK(arrhenius_transform(80.0, ArrheniusSign::positive) ==
        doctest::Approx(32.861).epsilon(1e-4));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform(-200.0, 1000.0);
    CHECK(arrhenius_transform(t, ArrheniusSign::negative) ==
          -arrhenius_transform(t, ArrheniusSign::positive));
  }
  // strictly decreasing in temperature for the positive sign
  double prev = arrhenius_transform(-273.0, ArrheniusSign::positive);
  for (double t = -270.0; t <= 1000.0; t += 10.0) {
    const double cur = arrhenius_transform(t, ArrheniusSign::positive);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(arrhenius_transform(-273.15, ArrheniusSign::positive), DomainError);
  CHECK_THROWS_AS(arrhenius_transform(-300.0, ArrheniusSign::positive), DomainError);
}

TEST_CASE("canonicalize_direction") {
  RmdtDataset data;
  data.units.push_back({"u1", {1.0, 2.0}, {-0.1, -0.3}, {}, std::nullopt});
  const FailureThreshold thr{-0.45, Direction::decreasing};

  const auto [flipped, thr2] = canonicalize_direction(data, thr);
  CHECK(flipped.units[0].measurements == std::vector<double>{0.1, 0.3});
  CHECK(thr2.value == 0.45);
  CHECK(thr2.direction == Direction::increasing);

  // increasing input is untouched
  const auto [same, thr3] = canonicalize_direction(data, {0.45, Direction::increasing});
  CHECK(same == data);
  CHECK(thr3.value == 0.45);

  // negating twice restores the original bit-exactly
  const auto [back, thr4] =
      canonicalize_direction(flipped, FailureThreshold{-thr2.value, Direction::decreasing});
  CHECK(back == data);
  CHECK(thr4.value == doctest::Approx(0.45));
}

TEST_CASE("rmdt write/load round-trip") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    RmdtDataset d;
    const int n = 1 + static_cast<int>(rng.uniform_index(4));
    for (int i = 0; i < n; ++i) {
      UnitSeries u;
      u.unit_id = "unit" + std::to_string(i);
      double t = 0.0;
      const int m = 1 + static_cast<int>(rng.uniform_index(5));
      for (int j = 0; j < m; ++j) {
        t += rng.uniform(0.01, 3.0);
        u.times.push_back(t);
        u.measurements.push_back(rng.normal(0.0, 5.0));
      }
      u.static_covariates["temp_c"] = 150.0 + 10.0 * i;
      d.units.push_back(std::move(u));
    }
    std::ostringstream out;
    write_rmdt(d, out);
    std::istringstream in(out.str());
    const auto loaded = parse_rmdt(in);
    CHECK(loaded == d);
  }
}

TEST_CASE("covariate long csv") {
  std::istringstream csv(
      "unit_id,time,name,value\n"
      "u1,0,uv,1.5\n"
      "u1,1,uv,2.5\n"
      "u1,0,rh,0.3\n"
      "u2,0,uv,0.9\n");
  const auto hists = parse_covariates(csv);
  REQUIRE(hists.size() == 3);
  CHECK(hists[0].unit_id == "u1");
  CHECK(hists[0].name == "uv");
  CHECK(hists[0].values == std::vector<double>{1.5, 2.5});
  CHECK(hists[1].name == "rh");
}
