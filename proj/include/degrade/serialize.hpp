#pragma once

#include "degrade/paths.hpp"
#include "degrade/types.hpp"

#include <json.hpp>

#include <string>

namespace degrade {

nlohmann::json path_to_json(const PathModel& path);
PathModel path_from_json(const nlohmann::json& j);

nlohmann::json fit_result_to_json(const FitResult& fit);

/// CSV with header time,cdf,lower,upper; bound cells empty when absent.
std::string cdf_curve_to_csv(const CdfCurve& curve);

std::string format_double(double v);

/// Write via temp file + rename so readers never observe partial output.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace degrade
