#include "degrade/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace degrade {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& token, const std::string& context) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("could not parse numeric value '" + token + "' in " +
                          context);
  }
  if (!std::isfinite(value)) {
    throw ValidationError("non-finite value '" + token + "' rejected in " +
                          context);
  }
  return value;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

int require_column(const std::vector<std::string>& header,
                   const std::string& name) {
  const int idx = find_column(header, name);
  if (idx < 0) throw SchemaError("required column '" + name + "' not found");
  return idx;
}

}  // namespace

std::size_t RmdtDataset::total_observations() const {
  return std::accumulate(units.begin(), units.end(), std::size_t{0},
                         [](std::size_t acc, const UnitSeries& u) {
                           return acc + u.size();
                         });
}

const UnitSeries& RmdtDataset::unit(const std::string& id) const {
  for (const auto& u : units) {
    if (u.unit_id == id) return u;
  }
  throw ValidationError("unknown unit id '" + id + "'");
}

std::vector<AddtRecord> AddtDataset::baseline_records() const {
  std::vector<AddtRecord> base;
  for (const auto& r : records) {
    if (r.time == 0.0) base.push_back(r);
  }
  return base;
}

double arrhenius_transform(double temp_c, ArrheniusSign sign) {
  if (temp_c <= -273.15) {
    throw DomainError("arrhenius_transform: temperature at or below absolute zero");
  }
  const double x = 11605.0 / (temp_c + 273.15);
  return sign == ArrheniusSign::positive ? x : -x;
}

std::pair<RmdtDataset, FailureThreshold> canonicalize_direction(
    const RmdtDataset& data, const FailureThreshold& threshold) {
  if (threshold.direction == Direction::increasing) return {data, threshold};
  RmdtDataset flipped = data;
  for (auto& u : flipped.units) {
    for (auto& y : u.measurements) y = -y;
  }
  return {std::move(flipped),
          FailureThreshold{-threshold.value, Direction::increasing}};
}

std::pair<AddtDataset, FailureThreshold> canonicalize_direction(
    const AddtDataset& data, const FailureThreshold& threshold) {
  if (threshold.direction == Direction::increasing) return {data, threshold};
  AddtDataset flipped = data;
  for (auto& r : flipped.records) r.response = -r.response;
  return {std::move(flipped),
          FailureThreshold{-threshold.value, Direction::increasing}};
}

// ---------------------------------------------------------------------------
// RMDT
// ---------------------------------------------------------------------------

RmdtDataset parse_rmdt(std::istream& in, const RmdtSchema& schema,
                       LoadStats* stats) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty RMDT file");
  const auto header = split_csv_line(line);
  const int unit_idx = require_column(header, schema.unit_col);
  const int time_idx = require_column(header, schema.time_col);
  const int resp_idx = require_column(header, schema.response_col);
  const int start_idx = find_column(header, schema.start_time_col);

  std::vector<int> covariate_cols;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (i != unit_idx && i != time_idx && i != resp_idx && i != start_idx) {
      covariate_cols.push_back(i);
    }
  }

  struct Row {
    double time;
    double response;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::map<std::string, double>> covariates;
  std::map<std::string, std::optional<double>> starts;
  std::vector<std::string> unit_order;
  int dropped = 0;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("row " + std::to_string(lineno) +
                            " has wrong field count");
    }
    const std::string& id = fields[unit_idx];
    const std::string ctx = "row " + std::to_string(lineno);
    if (fields[resp_idx].empty()) {
      ++dropped;
      continue;
    }
    if (!rows.count(id)) unit_order.push_back(id);
    rows[id].push_back(
        {parse_number(fields[time_idx], ctx), parse_number(fields[resp_idx], ctx)});
    std::map<std::string, double> cov;
    for (const int c : covariate_cols) {
      cov[header[c]] = parse_number(fields[c], ctx);
    }
    auto found = covariates.find(id);
    if (found == covariates.end()) {
      covariates[id] = cov;
    } else if (found->second != cov) {
      throw ValidationError("static covariates differ across rows of unit '" +
                            id + "'");
    }
    if (start_idx >= 0) {
      const double s = parse_number(fields[start_idx], ctx);
      if (starts[id].has_value() && *starts[id] != s) {
        throw ValidationError("start_time differs across rows of unit '" + id +
                              "'");
      }
      starts[id] = s;
    }
  }
  if (stats) stats->dropped_missing_response = dropped;
  if (rows.empty()) throw ValidationError("RMDT file contains no data rows");

  RmdtDataset data;
  for (const auto& id : unit_order) {
    auto& rlist = rows[id];
    std::stable_sort(rlist.begin(), rlist.end(),
                     [](const Row& a, const Row& b) { return a.time < b.time; });
    UnitSeries u;
    u.unit_id = id;
    u.static_covariates = covariates[id];
    u.start_time = starts.count(id) ? starts[id] : std::nullopt;
    for (const auto& r : rlist) {
      if (!u.times.empty() && r.time <= u.times.back()) {
        throw ValidationError("unit '" + id +
                              "' has duplicate measurement time " +
                              format_number(r.time));
      }
      u.times.push_back(r.time);
      u.measurements.push_back(r.response);
    }
    data.units.push_back(std::move(u));
  }
  return data;
}

RmdtDataset load_rmdt(const std::string& path, const RmdtSchema& schema,
                      LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open RMDT file '" + path + "'");
  return parse_rmdt(in, schema, stats);
}

void write_rmdt(const RmdtDataset& data, std::ostream& out) {
  std::set<std::string> names;
  bool any_start = false;
  for (const auto& u : data.units) {
    for (const auto& [k, v] : u.static_covariates) names.insert(k);
    any_start = any_start || u.start_time.has_value();
  }
  out << "unit_id,time,response";
  if (any_start) out << ",start_time";
  for (const auto& n : names) out << "," << n;
  out << "\n";
  for (const auto& u : data.units) {
    for (std::size_t j = 0; j < u.size(); ++j) {
      out << u.unit_id << "," << format_number(u.times[j]) << ","
          << format_number(u.measurements[j]);
      if (any_start) out << "," << format_number(u.start_time.value_or(0.0));
      for (const auto& n : names) out << "," << format_number(u.static_covariates.at(n));
      out << "\n";
    }
  }
}

void write_rmdt(const RmdtDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write RMDT file '" + path + "'");
  write_rmdt(data, out);
}

// ---------------------------------------------------------------------------
// ADDT
// ---------------------------------------------------------------------------

AddtDataset parse_addt(std::istream& in, const AddtSchema& schema,
                       LoadStats* stats) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty ADDT file");
  const auto header = split_csv_line(line);
  const int cond_idx = require_column(header, schema.condition_col);
  const int time_idx = require_column(header, schema.time_col);
  const int resp_idx = require_column(header, schema.response_col);
  const int batch_idx = find_column(header, schema.batch_col);

  AddtDataset data;
  int dropped = 0;
  int lineno = 1;
  int singleton = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("row " + std::to_string(lineno) +
                            " has wrong field count");
    }
    const std::string ctx = "row " + std::to_string(lineno);
    if (fields[resp_idx].empty()) {
      ++dropped;
      continue;
    }
    AddtRecord rec;
    rec.raw_condition = parse_number(fields[cond_idx], ctx);
    rec.condition = arrhenius_transform(rec.raw_condition, schema.stress_sign);
    rec.time = parse_number(fields[time_idx], ctx);
    if (rec.time < 0.0) {
      throw ValidationError("negative time at " + ctx);
    }
    rec.response = parse_number(fields[resp_idx], ctx);
    if (batch_idx >= 0 && !fields[batch_idx].empty()) {
      rec.batch_id = fields[batch_idx];
    } else {
      rec.batch_id = "_single_" + std::to_string(singleton++);
    }
    data.records.push_back(std::move(rec));
  }
  if (stats) stats->dropped_missing_response = dropped;
  if (data.records.empty()) throw ValidationError("ADDT file contains no data rows");
  return data;
}

AddtDataset load_addt(const std::string& path, const AddtSchema& schema,
                      LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open ADDT file '" + path + "'");
  return parse_addt(in, schema, stats);
}

void write_addt(const AddtDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write ADDT file '" + path + "'");
  out << "condition_c,time,response,batch\n";
  for (const auto& r : data.records) {
    out << format_number(r.raw_condition) << "," << format_number(r.time) << ","
        << format_number(r.response) << "," << r.batch_id << "\n";
  }
}

// ---------------------------------------------------------------------------
// Dynamic covariates (long format)
// ---------------------------------------------------------------------------

std::vector<CovariateHistory> parse_covariates(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty covariate file");
  const auto header = split_csv_line(line);
  const int unit_idx = require_column(header, "unit_id");
  const int time_idx = require_column(header, "time");
  const int name_idx = require_column(header, "name");
  const int value_idx = require_column(header, "value");

  std::map<std::pair<std::string, std::string>, CovariateHistory> series;
  std::vector<std::pair<std::string, std::string>> order;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("row " + std::to_string(lineno) +
                            " has wrong field count");
    }
    const std::string ctx = "row " + std::to_string(lineno);
    const auto key = std::make_pair(fields[unit_idx], fields[name_idx]);
    auto it = series.find(key);
    if (it == series.end()) {
      order.push_back(key);
      it = series.emplace(key, CovariateHistory{key.first, key.second, {}, {}})
               .first;
    }
    auto& h = it->second;
    const double t = parse_number(fields[time_idx], ctx);
    if (!h.times.empty() && t <= h.times.back()) {
      throw ValidationError("covariate '" + key.second + "' of unit '" +
                            key.first + "' has non-increasing time at " + ctx);
    }
    h.times.push_back(t);
    h.values.push_back(parse_number(fields[value_idx], ctx));
  }
  std::vector<CovariateHistory> result;
  result.reserve(order.size());
  for (const auto& key : order) result.push_back(std::move(series[key]));
  return result;
}

std::vector<CovariateHistory> load_covariates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open covariate file '" + path + "'");
  return parse_covariates(in);
}

Real FitResult::estimate(const std::string& name) const {
  for (std::size_t i = 0; i < param_names.size(); ++i) {
    if (param_names[i] == name) return estimates[static_cast<Index>(i)];
  }
  throw DomainError("no parameter named '" + name + "'");
}

Real FitResult::std_error(const std::string& name) const {
  for (std::size_t i = 0; i < param_names.size(); ++i) {
    if (param_names[i] == name) return std_errors[static_cast<Index>(i)];
  }
  throw DomainError("no parameter named '" + name + "'");
}

bool FitResult::has_param(const std::string& name) const {
  return std::find(param_names.begin(), param_names.end(), name) !=
         param_names.end();
}

}  // namespace degrade
