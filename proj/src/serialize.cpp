#include "degrade/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace degrade {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& x : j) v[i++] = x.get<double>();
  return v;
}

json history_to_json(const CovariateHistory& h) {
  return json{{"unit_id", h.unit_id},
              {"name", h.name},
              {"times", h.times},
              {"values", h.values}};
}

CovariateHistory history_from_json(const json& j) {
  CovariateHistory h;
  h.unit_id = j.value("unit_id", "");
  h.name = j.value("name", "");
  h.times = j.at("times").get<std::vector<double>>();
  h.values = j.at("values").get<std::vector<double>>();
  return h;
}

const char* effect_kind_name(CovariateEffect::Kind k) {
  switch (k) {
    case CovariateEffect::Kind::linear:
      return "linear";
    case CovariateEffect::Kind::power:
      return "power";
    case CovariateEffect::Kind::exponential:
      return "exponential";
  }
  return "linear";
}

CovariateEffect::Kind effect_kind_from_name(const std::string& s) {
  if (s == "linear") return CovariateEffect::Kind::linear;
  if (s == "power") return CovariateEffect::Kind::power;
  if (s == "exponential") return CovariateEffect::Kind::exponential;
  throw ConfigError("unknown covariate effect kind '" + s + "'");
}

}  // namespace

json path_to_json(const PathModel& path) {
  json params;
  if (const auto* p = std::get_if<LinearPath>(&path)) {
    params = {{"intercept", p->intercept}, {"slope", p->slope}};
  } else if (const auto* p = std::get_if<ParisPath>(&path)) {
    params = {{"theta1", p->theta1},
              {"theta2", p->theta2},
              {"initial", p->initial},
              {"stress", p->stress}};
  } else if (const auto* p = std::get_if<LogLogisticPath>(&path)) {
    params = {{"asymptote", p->asymptote}, {"scale", p->scale}, {"shape", p->shape}};
  } else if (const auto* p = std::get_if<DeviceBPath>(&path)) {
    params = {{"beta1", p->beta1},
              {"beta2", p->beta2},
              {"activation", p->activation},
              {"baseline_x", p->baseline_x},
              {"x", p->x}};
  } else if (const auto* p = std::get_if<CoatingPath>(&path)) {
    params = {{"asymptote", p->asymptote},
              {"mu", p->mu},
              {"coef", vector_to_json(p->coef)},
              {"gamma", p->gamma},
              {"w", p->w},
              {"covariates", vector_to_json(p->covariates)}};
  } else {
    const auto& ce = std::get<CumulativeExposurePath>(path);
    json effects = json::array();
    for (const auto& e : ce.effects) {
      effects.push_back({{"kind", effect_kind_name(e.kind)},
                         {"coef", e.coef},
                         {"exponent", e.exponent}});
    }
    json histories = json::array();
    for (const auto& h : ce.histories) histories.push_back(history_to_json(h));
    params = {{"beta0", ce.beta0},
              {"unit_shift", ce.unit_shift},
              {"effects", effects},
              {"histories", histories}};
  }
  return json{{"family", family_name(path)}, {"params", params}};
}

PathModel path_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  const json& p = j.at("params");
  if (family == "linear") {
    return LinearPath{p.at("intercept").get<double>(), p.at("slope").get<double>()};
  }
  if (family == "paris") {
    return ParisPath{p.at("theta1").get<double>(), p.at("theta2").get<double>(),
                     p.at("initial").get<double>(), p.value("stress", 1.0)};
  }
  if (family == "log_logistic") {
    return LogLogisticPath{p.at("asymptote").get<double>(),
                           p.at("scale").get<double>(), p.at("shape").get<double>()};
  }
  if (family == "device_b") {
    return DeviceBPath{p.at("beta1").get<double>(), p.at("beta2").get<double>(),
                       p.at("activation").get<double>(),
                       p.at("baseline_x").get<double>(), p.at("x").get<double>()};
  }
  if (family == "coating") {
    CoatingPath c;
    c.asymptote = p.at("asymptote").get<double>();
    c.mu = p.at("mu").get<double>();
    c.coef = vector_from_json(p.value("coef", json::array()));
    c.gamma = p.at("gamma").get<double>();
    c.w = p.value("w", 0.0);
    c.covariates = vector_from_json(p.value("covariates", json::array()));
    return c;
  }
  if (family == "cumulative_exposure") {
    CumulativeExposurePath c;
    c.beta0 = p.at("beta0").get<double>();
    c.unit_shift = p.value("unit_shift", 0.0);
    for (const auto& e : p.value("effects", json::array())) {
      CovariateEffect eff;
      eff.kind = effect_kind_from_name(e.at("kind").get<std::string>());
      eff.coef = e.at("coef").get<double>();
      eff.exponent = e.value("exponent", 1.0);
      c.effects.push_back(eff);
    }
    for (const auto& h : p.value("histories", json::array())) {
      c.histories.push_back(history_from_json(h));
    }
    return c;
  }
  throw ConfigError("unknown path family '" + family + "'");
}

json fit_result_to_json(const FitResult& fit) {
  json estimates = json::object();
  json std_errors = json::object();
  for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
    estimates[fit.param_names[i]] = fit.estimates[static_cast<Index>(i)];
    std_errors[fit.param_names[i]] = fit.std_errors[static_cast<Index>(i)];
  }
  json cov = json::array();
  for (Index r = 0; r < fit.covariance.rows(); ++r) {
    cov.push_back(vector_to_json(fit.covariance.row(r).transpose()));
  }
  return json{{"param_names", fit.param_names},
              {"estimates", estimates},
              {"std_errors", std_errors},
              {"covariance", cov},
              {"loglik", fit.loglik},
              {"aic", fit.aic},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"seed", fit.seed}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string cdf_curve_to_csv(const CdfCurve& curve) {
  std::string out = "time,cdf,lower,upper\n";
  for (Index i = 0; i < curve.times.size(); ++i) {
    out += format_double(curve.times[i]);
    out += ',';
    out += format_double(curve.cdf[i]);
    out += ',';
    if (curve.lower) out += format_double((*curve.lower)[i]);
    out += ',';
    if (curve.upper) out += format_double((*curve.upper)[i]);
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write file '" + tmp + "'");
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace degrade
