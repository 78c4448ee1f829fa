#pragma once

// Dataset containers and ingestion shared by all fitting modules.  Datasets
// are immutable after load: nothing here mutates in place, and the
// canonicalization helpers return transformed copies.

#include "degrade/types.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace degrade {

/// Repeated measurements on one unit, times strictly increasing.
struct UnitSeries {
  std::string unit_id;
  std::vector<double> times;
  std::vector<double> measurements;
  std::map<std::string, double> static_covariates;
  std::optional<double> start_time;  // field start offset, days

  std::size_t size() const { return times.size(); }
  bool operator==(const UnitSeries&) const = default;
};

struct RmdtDataset {
  std::vector<UnitSeries> units;
  std::string time_unit;
  std::string response_unit;

  std::size_t total_observations() const;
  const UnitSeries& unit(const std::string& id) const;
  bool operator==(const RmdtDataset&) const = default;
};

/// One destructive measurement: condition is the transformed stress x_i,
/// raw_condition the value as recorded (e.g. temperature in Celsius).
struct AddtRecord {
  double condition = 0.0;
  double raw_condition = 0.0;
  double time = 0.0;
  std::string batch_id;
  double response = 0.0;

  bool operator==(const AddtRecord&) const = default;
};

struct AddtDataset {
  std::vector<AddtRecord> records;

  std::vector<AddtRecord> baseline_records() const;  // time == 0
  bool operator==(const AddtDataset&) const = default;
};

/// Observed trajectory of one dynamic covariate for one unit.
struct CovariateHistory {
  std::string unit_id;
  std::string name;
  std::vector<double> times;
  std::vector<double> values;

  bool operator==(const CovariateHistory&) const = default;
};

// ---------------------------------------------------------------------------
// Stress transforms.
// ---------------------------------------------------------------------------

enum class ArrheniusSign { positive, negative };

/// sign * 11605 / (temp_c + 273.15).  Both sign conventions occur in
/// published model forms, so the caller states which one it wants.
double arrhenius_transform(double temp_c, ArrheniusSign sign);

// ---------------------------------------------------------------------------
// Direction canonicalization: all downstream first-crossing logic assumes a
// nondecreasing path, so decreasing analyses negate responses and threshold.
// ---------------------------------------------------------------------------

std::pair<RmdtDataset, FailureThreshold> canonicalize_direction(
    const RmdtDataset& data, const FailureThreshold& threshold);
std::pair<AddtDataset, FailureThreshold> canonicalize_direction(
    const AddtDataset& data, const FailureThreshold& threshold);

// ---------------------------------------------------------------------------
// CSV ingestion.  RMDT: unit_id,time,response[,<covariate>...].
// ADDT: condition_c,time,response[,batch].  Covariates (long format):
// unit_id,time,name,value.  Decimal point '.', NaN/Inf tokens rejected,
// rows with an empty response dropped (count reported through LoadStats).
// ---------------------------------------------------------------------------

struct RmdtSchema {
  std::string unit_col = "unit_id";
  std::string time_col = "time";
  std::string response_col = "response";
  std::string start_time_col = "start_time";  // optional column
};

struct AddtSchema {
  std::string condition_col = "condition_c";
  std::string time_col = "time";
  std::string response_col = "response";
  std::string batch_col = "batch";  // optional; absent -> singleton batches
  ArrheniusSign stress_sign = ArrheniusSign::negative;
};

struct LoadStats {
  int dropped_missing_response = 0;
};

RmdtDataset load_rmdt(const std::string& path, const RmdtSchema& schema = {},
                      LoadStats* stats = nullptr);
RmdtDataset parse_rmdt(std::istream& in, const RmdtSchema& schema = {},
                       LoadStats* stats = nullptr);
void write_rmdt(const RmdtDataset& data, const std::string& path);
void write_rmdt(const RmdtDataset& data, std::ostream& out);

AddtDataset load_addt(const std::string& path, const AddtSchema& schema = {},
                      LoadStats* stats = nullptr);
AddtDataset parse_addt(std::istream& in, const AddtSchema& schema = {},
                       LoadStats* stats = nullptr);
void write_addt(const AddtDataset& data, const std::string& path);

std::vector<CovariateHistory> load_covariates(const std::string& path);
std::vector<CovariateHistory> parse_covariates(std::istream& in);

}  // namespace degrade
