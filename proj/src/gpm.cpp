#include "degrade/gpm.hpp"

#include "degrade/parallel.hpp"
#include "degrade/quadrature.hpp"
#include "degrade/rng.hpp"
#include "degrade/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace degrade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FamilyInfo {
  std::vector<std::string> params;
  std::vector<bool> positive;  // must stay > 0; optimized on log scale
};

const FamilyInfo& family_info(GpmFamily family) {
  static const FamilyInfo linear{{"intercept", "slope"}, {false, false}};
  static const FamilyInfo paris{{"theta1", "theta2"}, {true, false}};
  static const FamilyInfo loglog{{"asymptote", "scale", "shape"},
                                 {false, true, true}};
  static const FamilyInfo device{{"beta1", "beta2", "activation"},
                                 {false, false, false}};
  switch (family) {
    case GpmFamily::linear:
      return linear;
    case GpmFamily::paris:
      return paris;
    case GpmFamily::log_logistic:
      return loglog;
    case GpmFamily::device_b:
      return device;
  }
  throw DomainError("unknown GPM family");
}

// Where each family parameter comes from: a fixed-effect slot or a
// random-effect slot (with its link).
struct ParamSource {
  bool random = false;
  int index = 0;
  RandomLink link = RandomLink::identity;
};

struct GpmLayout {
  const FamilyInfo* info = nullptr;
  std::vector<ParamSource> sources;  // indexed by family parameter
  int n_fixed = 0;
  int n_random = 0;

  int dim() const {
    return n_fixed + 2 * n_random + n_random * (n_random - 1) / 2 + 1;
  }
  int mu_offset() const { return n_fixed; }
  int sigma_offset() const { return n_fixed + n_random; }
  int rho_offset() const { return n_fixed + 2 * n_random; }
  int sigma_eps_offset() const { return dim() - 1; }
};

GpmLayout make_layout(const GpmModelSpec& spec) {
  GpmLayout layout;
  layout.info = &family_info(spec.family);
  const auto& names = layout.info->params;
  layout.sources.resize(names.size());
  std::vector<bool> seen(names.size(), false);
  auto slot = [&](const std::string& name) -> int {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      throw DomainError("parameter '" + name + "' not in family '" +
                        std::string(gpm_family_name(spec.family)) + "'");
    }
    const int idx = static_cast<int>(it - names.begin());
    if (seen[idx]) throw DomainError("parameter '" + name + "' listed twice");
    seen[idx] = true;
    return idx;
  };
  for (const auto& name : spec.fixed_params) {
    layout.sources[slot(name)] = {false, layout.n_fixed++, RandomLink::identity};
  }
  for (const auto& rp : spec.random_params) {
    layout.sources[slot(rp.name)] = {true, layout.n_random++, rp.link};
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!seen[i]) {
      throw DomainError("family parameter '" + names[i] +
                        "' is neither fixed nor random");
    }
  }
  return layout;
}

double apply_link(double value, RandomLink link) {
  return link == RandomLink::log_link ? std::exp(value) : value;
}

PathModel build_path(const GpmModelSpec& spec, const GpmLayout& layout,
                     const Vector& fixed, const Vector& random_effects,
                     double unit_x) {
  auto value = [&](int family_param) {
    const ParamSource& src = layout.sources[family_param];
    return src.random ? apply_link(random_effects[src.index], src.link)
                      : fixed[src.index];
  };
  switch (spec.family) {
    case GpmFamily::linear:
      return PathModel{LinearPath{value(0), value(1)}};
    case GpmFamily::paris:
      return PathModel{
          ParisPath{value(0), value(1), spec.paris_initial, spec.paris_stress}};
    case GpmFamily::log_logistic:
      return PathModel{LogLogisticPath{value(0), value(1), value(2)}};
    case GpmFamily::device_b:
      return PathModel{DeviceBPath{value(0), value(1), value(2),
                                   spec.device_baseline_x, unit_x}};
  }
  throw DomainError("unknown GPM family");
}

double unit_stress(const GpmModelSpec& spec,
                   const std::map<std::string, double>& covariates,
                   const std::string& unit_id) {
  if (!spec.accelerator) return spec.device_baseline_x;
  const auto it = covariates.find(spec.accelerator->covariate);
  if (it == covariates.end()) {
    throw ValidationError("unit '" + unit_id + "' lacks accelerator covariate '" +
                          spec.accelerator->covariate + "'");
  }
  return arrhenius_transform(it->second, spec.accelerator->sign);
}

struct NaturalParams {
  Vector fixed;
  Vector mu;
  Matrix chol;  // lower Cholesky factor of Sigma_beta
  double sigma_eps = 0.0;
};

NaturalParams unpack_natural(const GpmModelSpec& spec, const GpmLayout& layout,
                             const Vector& theta) {
  if (theta.size() != layout.dim()) {
    throw DomainError("parameter vector has length " +
                      std::to_string(theta.size()) + ", expected " +
                      std::to_string(layout.dim()));
  }
  NaturalParams p;
  p.fixed = theta.head(layout.n_fixed);
  const int d = layout.n_random;
  p.mu = theta.segment(layout.mu_offset(), d);
  const Vector sigmas = theta.segment(layout.sigma_offset(), d);
  for (int i = 0; i < d; ++i) {
    if (!(sigmas[i] > 0.0)) {
      throw DomainError("random-effect standard deviations must be positive");
    }
  }
  Matrix sigma_beta = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) sigma_beta(i, i) = sigmas[i] * sigmas[i];
  int k = layout.rho_offset();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double rho = theta[k++];
      if (!(std::abs(rho) < 1.0)) {
        throw DomainError("random-effect correlations must lie in (-1,1)");
      }
      sigma_beta(i, j) = sigma_beta(j, i) = rho * sigmas[i] * sigmas[j];
    }
  }
  if (d > 0) {
    Eigen::LLT<Matrix> llt(sigma_beta);
    if (llt.info() != Eigen::Success) {
      throw DomainError("random-effect covariance is not positive definite");
    }
    p.chol = llt.matrixL();
  } else {
    p.chol.resize(0, 0);
  }
  for (std::size_t fp = 0; fp < layout.sources.size(); ++fp) {
    const auto& src = layout.sources[fp];
    if (!src.random && layout.info->positive[fp] && !(p.fixed[src.index] > 0.0)) {
      throw DomainError("fixed parameter '" + layout.info->params[fp] +
                        "' must be positive");
    }
  }
  p.sigma_eps = theta[layout.sigma_eps_offset()];
  if (!(p.sigma_eps > 0.0)) throw DomainError("sigma_eps must be positive");
  return p;
}

// Whether a fixed-effect slot is positivity-constrained (log scale inside the
// optimizer).
bool fixed_is_positive(const GpmLayout& layout, int fixed_index) {
  for (std::size_t fp = 0; fp < layout.sources.size(); ++fp) {
    const auto& src = layout.sources[fp];
    if (!src.random && src.index == fixed_index) return layout.info->positive[fp];
  }
  return false;
}

// Optimizer coordinates: log for positive fixed effects and sigma_eps,
// Cholesky factor of Sigma_beta with log diagonal, everything else raw.
Vector natural_to_transformed(const GpmModelSpec& spec, const GpmLayout& layout,
                              const Vector& theta) {
  const NaturalParams p = unpack_natural(spec, layout, theta);
  Vector t(layout.dim());
  for (int i = 0; i < layout.n_fixed; ++i) {
    t[i] = fixed_is_positive(layout, i) ? std::log(p.fixed[i]) : p.fixed[i];
  }
  const int d = layout.n_random;
  t.segment(layout.mu_offset(), d) = p.mu;
  for (int i = 0; i < d; ++i) {
    t[layout.sigma_offset() + i] = std::log(p.chol(i, i));
  }
  int k = layout.rho_offset();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) t[k++] = p.chol(j, i);
  }
  t[layout.sigma_eps_offset()] = std::log(p.sigma_eps);
  return t;
}

Vector transformed_to_natural(const GpmLayout& layout, const Vector& t) {
  Vector theta(layout.dim());
  for (int i = 0; i < layout.n_fixed; ++i) {
    theta[i] = fixed_is_positive(layout, i) ? std::exp(t[i]) : t[i];
  }
  const int d = layout.n_random;
  theta.segment(layout.mu_offset(), d) = t.segment(layout.mu_offset(), d);
  Matrix chol = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) chol(i, i) = std::exp(t[layout.sigma_offset() + i]);
  int k = layout.rho_offset();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) chol(j, i) = t[k++];
  }
  const Matrix sigma_beta = chol * chol.transpose();
  for (int i = 0; i < d; ++i) {
    theta[layout.sigma_offset() + i] = std::sqrt(sigma_beta(i, i));
  }
  k = layout.rho_offset();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      theta[k++] = sigma_beta(i, j) /
                   std::sqrt(sigma_beta(i, i) * sigma_beta(j, j));
    }
  }
  theta[layout.sigma_eps_offset()] = std::exp(t[layout.sigma_eps_offset()]);
  return theta;
}

// ---------------------------------------------------------------------------
// Marginal likelihood evaluator: per-unit adaptive Gauss-Hermite integrals.
// ---------------------------------------------------------------------------

class GpmEvaluator {
 public:
  GpmEvaluator(const GpmModelSpec& spec, const RmdtDataset& data, int quad_order)
      : spec_(spec), layout_(make_layout(spec)), data_(data) {
    if (data.units.empty()) throw ValidationError("dataset has no units");
    const int order = quad_order > 0 ? quad_order : spec.quadrature_order;
    rule_ = gauss_hermite(order);
    stresses_.reserve(data.units.size());
    for (const auto& u : data.units) {
      if (u.times.empty()) {
        throw ValidationError("unit '" + u.unit_id + "' has no observations");
      }
      for (const double t : u.times) {
        if (t < 0.0) {
          throw ValidationError("unit '" + u.unit_id + "' has negative time");
        }
      }
      stresses_.push_back(unit_stress(spec, u.static_covariates, u.unit_id));
    }
  }

  const GpmLayout& layout() const { return layout_; }

  double loglik_natural(const Vector& theta) const {
    return loglik(unpack_natural(spec_, layout_, theta));
  }

  double loglik(const NaturalParams& p) const {
    double total = 0.0;
    for (std::size_t i = 0; i < data_.units.size(); ++i) {
      total += unit_loglik(static_cast<int>(i), p);
    }
    return total;
  }

  double unit_loglik(int i, const NaturalParams& p) const {
    const UnitSeries& u = data_.units[i];
    const double x = stresses_[i];
    const int d = layout_.n_random;

    const auto cond_loglik = [&](const Vector& b) -> double {
      double lp = 0.0;
      try {
        const PathModel path = build_path(spec_, layout_, p.fixed, b, x);
        for (std::size_t j = 0; j < u.size(); ++j) {
          const double mean = evaluate(path, u.times[j]);
          lp += normal_logpdf(u.measurements[j], mean, p.sigma_eps);
        }
      } catch (const Error&) {
        return -kInf;
      }
      return std::isfinite(lp) ? lp : -kInf;
    };

    if (d == 0) {  // fixed-effects regression, no integral
      const double lp = cond_loglik(Vector());
      if (!std::isfinite(lp)) {
        throw NumericError("likelihood not finite for unit '" + u.unit_id + "'");
      }
      return lp;
    }

    const auto h = [&](const Vector& b) {
      return cond_loglik(b) + mvn_logpdf_chol(b, p.mu, p.chol);
    };
    const Objective neg_h = [&](const Vector& b) { return -h(b); };

    // Laplace recentering: mode by damped Newton with FD derivatives.
    Vector mode = p.mu;
    double fm = neg_h(mode);
    if (!std::isfinite(fm)) {
      throw NumericError("quadrature mode search failed for unit '" + u.unit_id +
                         "': start point has zero likelihood");
    }
    for (int iter = 0; iter < 50; ++iter) {
      const Vector g = fd_gradient(neg_h, mode, 1e-7);
      if (!g.allFinite()) break;
      if (g.lpNorm<Eigen::Infinity>() < 1e-8 * (1.0 + std::abs(fm))) break;
      Matrix hess = fd_hessian(neg_h, mode, 1e-4);
      Vector step;
      for (double ridge = 0.0;; ridge = std::max(1e-8, 4.0 * ridge)) {
        Eigen::LLT<Matrix> llt(hess + ridge * Matrix::Identity(d, d));
        if (llt.info() == Eigen::Success) {
          step = llt.solve(-g);
          break;
        }
        if (ridge > 1e12) {
          step = -g;
          break;
        }
      }
      double lambda = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls) {
        const Vector cand = mode + lambda * step;
        const double fc = neg_h(cand);
        if (fc < fm) {
          mode = cand;
          fm = fc;
          moved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!moved) break;
    }

    // Curvature at the mode; fall back to the prior covariance if indefinite.
    Matrix curv = fd_hessian(neg_h, mode, 1e-4);
    Matrix recenter_chol;  // lower chol of the recentering covariance
    Eigen::LLT<Matrix> llt_curv(curv);
    bool have_curv = llt_curv.info() == Eigen::Success && curv.allFinite();
    if (have_curv) {
      const Matrix cov = llt_curv.solve(Matrix::Identity(d, d));
      Eigen::LLT<Matrix> llt_cov(cov);
      if (llt_cov.info() == Eigen::Success) {
        recenter_chol = llt_cov.matrixL();
      } else {
        have_curv = false;
      }
    }
    if (!have_curv) recenter_chol = p.chol;

    // Tensor-product adaptive Gauss-Hermite in the recentered coordinates.
    const int q = static_cast<int>(rule_.nodes.size());
    int n_nodes = 1;
    for (int k = 0; k < d; ++k) n_nodes *= q;
    Vector terms(n_nodes);
    std::vector<int> idx(d, 0);
    Vector z(d);
    for (int node = 0; node < n_nodes; ++node) {
      double logw = 0.0;
      for (int k = 0; k < d; ++k) {
        z[k] = rule_.nodes[idx[k]];
        logw += rule_.log_weights[idx[k]];
      }
      const Vector b = mode + kSqrtTwo * (recenter_chol * z);
      terms[node] = h(b) + z.squaredNorm() + logw;
      for (int k = 0; k < d; ++k) {  // odometer
        if (++idx[k] < q) break;
        idx[k] = 0;
      }
    }
    double logdet = 0.0;
    for (int k = 0; k < d; ++k) logdet += std::log(recenter_chol(k, k));
    const double value = 0.5 * d * std::log(2.0) + logdet + log_sum_exp(terms);
    if (!std::isfinite(value)) {
      throw NumericError("quadrature failed for unit '" + u.unit_id + "'");
    }
    return value;
  }

  const GpmModelSpec& spec_;
  GpmLayout layout_;
  const RmdtDataset& data_;
  GaussHermiteRule rule_;
  std::vector<double> stresses_;
};

Matrix psd_project(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], 0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Pseudo-inverse through an eigenvalue clamp; keeps the covariance PSD even
// when the observed information is near-singular.
Matrix robust_inverse(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const double floor = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Vector inv = es.eigenvalues();
  for (Index i = 0; i < inv.size(); ++i) {
    inv[i] = inv[i] > floor ? 1.0 / inv[i] : 0.0;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

bool is_lognormal_rate_linear(const GpmModelSpec& spec) {
  return spec.family == GpmFamily::linear && spec.fixed_params.size() == 1 &&
         spec.fixed_params[0] == "intercept" && spec.random_params.size() == 1 &&
         spec.random_params[0].name == "slope" &&
         spec.random_params[0].link == RandomLink::log_link;
}

}  // namespace

GpmFamily gpm_family_from_name(const std::string& name) {
  if (name == "linear") return GpmFamily::linear;
  if (name == "paris") return GpmFamily::paris;
  if (name == "log_logistic") return GpmFamily::log_logistic;
  if (name == "device_b") return GpmFamily::device_b;
  throw ConfigError("unknown GPM family '" + name + "'");
}

const char* gpm_family_name(GpmFamily family) {
  switch (family) {
    case GpmFamily::linear:
      return "linear";
    case GpmFamily::paris:
      return "paris";
    case GpmFamily::log_logistic:
      return "log_logistic";
    case GpmFamily::device_b:
      return "device_b";
  }
  return "?";
}

std::vector<std::string> gpm_param_names(const GpmModelSpec& spec) {
  make_layout(spec);  // validates the parameter partition
  std::vector<std::string> names;
  for (const auto& f : spec.fixed_params) names.push_back(f);
  for (const auto& r : spec.random_params) names.push_back("mu_" + r.name);
  for (const auto& r : spec.random_params) names.push_back("sigma_" + r.name);
  for (std::size_t i = 0; i < spec.random_params.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.random_params.size(); ++j) {
      names.push_back("rho_" + spec.random_params[i].name + "_" +
                      spec.random_params[j].name);
    }
  }
  names.push_back("sigma_eps");
  return names;
}

double marginal_log_likelihood(const GpmModelSpec& spec, const Vector& theta,
                               const RmdtDataset& data, int quadrature_order) {
  const GpmEvaluator evaluator(spec, data, quadrature_order);
  return evaluator.loglik_natural(theta);
}

Vector gpm_initial_guess(const GpmModelSpec& spec, const RmdtDataset& data) {
  const GpmLayout layout = make_layout(spec);
  const int n = static_cast<int>(data.units.size());
  const int n_family = static_cast<int>(layout.info->params.size());
  Matrix per_unit = Matrix::Constant(n, n_family, std::nan(""));
  double rss = 0.0;
  std::size_t rn = 0;

  const auto ols = [](const std::vector<double>& xs, const std::vector<double>& ys,
                      double& slope, double& intercept) {
    const std::size_t m = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < m; ++j) {
      sx += xs[j];
      sy += ys[j];
      sxx += xs[j] * xs[j];
      sxy += xs[j] * ys[j];
    }
    const double denom = m * sxx - sx * sx;
    if (denom <= 0.0) {
      slope = std::nan("");
      intercept = m ? sy / m : std::nan("");
      return;
    }
    slope = (m * sxy - sx * sy) / denom;
    intercept = (sy - slope * sx) / m;
  };

  if (spec.family == GpmFamily::linear) {
    for (int i = 0; i < n; ++i) {
      const auto& u = data.units[i];
      double slope, intercept;
      ols(u.times, u.measurements, slope, intercept);
      per_unit(i, 0) = intercept;
      per_unit(i, 1) = slope;
      if (u.size() >= 3 && std::isfinite(slope)) {
        for (std::size_t j = 0; j < u.size(); ++j) {
          const double r = u.measurements[j] - intercept - slope * u.times[j];
          rss += r * r;
          ++rn;
        }
      }
    }
  } else if (spec.family == GpmFamily::device_b) {
    std::vector<double> log_rates(n, std::nan("")), xs(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const auto& u = data.units[i];
      xs[i] = unit_stress(spec, u.static_covariates, u.unit_id);
      double peak = 0.0;
      for (const double y : u.measurements) peak = std::max(peak, std::abs(y));
      if (peak <= 0.0) continue;
      const double amp = 1.05 * peak;
      std::vector<double> ts, ls;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double frac = std::abs(u.measurements[j]) / amp;
        if (frac < 0.999) {
          ts.push_back(u.times[j]);
          ls.push_back(std::log1p(-frac));
        }
      }
      double slope, intercept;
      ols(ts, ls, slope, intercept);
      if (std::isfinite(slope) && slope < 0.0) log_rates[i] = std::log(-slope);
      per_unit(i, 1) = std::log(amp);
      if (std::isfinite(log_rates[i])) {
        const double r = -slope;
        for (std::size_t j = 0; j < u.size(); ++j) {
          const double fit = -amp * (1.0 - std::exp(-r * u.times[j]));
          const double res = u.measurements[j] - fit;
          rss += res * res;
          ++rn;
        }
      }
    }
    // log rate = beta1 + activation (x0 - x); regress over units
    std::vector<double> dx, lr;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(log_rates[i])) {
        dx.push_back(spec.device_baseline_x - xs[i]);
        lr.push_back(log_rates[i]);
      }
    }
    double act, beta1_mean;
    ols(dx, lr, act, beta1_mean);
    if (!std::isfinite(act)) act = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(log_rates[i])) {
        per_unit(i, 0) = log_rates[i] - act * (spec.device_baseline_x - xs[i]);
      }
      per_unit(i, 2) = act;
    }
  } else if (spec.family == GpmFamily::log_logistic) {
    for (int i = 0; i < n; ++i) {
      const auto& u = data.units[i];
      double peak = 0.0;
      for (const double y : u.measurements) {
        if (std::abs(y) > std::abs(peak)) peak = y;
      }
      if (peak == 0.0) continue;
      const double asym = 1.2 * peak;
      std::vector<double> lt, lz;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double ratio = u.measurements[j] / asym;
        if (u.times[j] > 0.0 && ratio > 1e-6 && ratio < 0.999) {
          lt.push_back(std::log(u.times[j]));
          lz.push_back(std::log(1.0 / ratio - 1.0));
        }
      }
      double slope, intercept;
      ols(lt, lz, slope, intercept);
      per_unit(i, 0) = asym;
      if (std::isfinite(slope) && slope < 0.0) {
        const double shape = -1.0 / slope;
        per_unit(i, 2) = shape;
        per_unit(i, 1) = std::exp(shape * intercept);
      }
    }
  } else if (spec.family == GpmFamily::paris) {
    const double c = M_PI * spec.paris_stress * spec.paris_stress;
    for (int i = 0; i < n; ++i) {
      const auto& u = data.units[i];
      std::vector<double> ts, ly;
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (u.measurements[j] > spec.paris_initial * (1.0 + 1e-9)) {
          ts.push_back(u.times[j]);
          ly.push_back(std::log(u.measurements[j] / spec.paris_initial));
        }
      }
      double slope, intercept;
      ols(ts, ly, slope, intercept);
      if (std::isfinite(slope) && slope > 0.0) per_unit(i, 0) = slope / c;
      per_unit(i, 1) = 2.0;
    }
  }

  double sigma_eps = rn > 4 ? std::sqrt(rss / static_cast<double>(rn))
                            : spec.error_sd;
  if (!(sigma_eps > 0.0) || !std::isfinite(sigma_eps)) sigma_eps = 0.1;
  sigma_eps = std::max(sigma_eps, 1e-4);

  // Package per-unit estimates into the canonical natural vector.
  const auto column = [&](int fp) {
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(per_unit(i, fp))) vals.push_back(per_unit(i, fp));
    }
    return vals;
  };
  const auto mean_of = [](const std::vector<double>& v, double fallback) {
    if (v.empty()) return fallback;
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };
  const auto sd_of = [&](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return std::nan("");
    double s = 0.0;
    for (const double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / (v.size() - 1));
  };

  Vector theta(layout.dim());
  const auto& names = layout.info->params;
  std::vector<std::vector<double>> linked_cols(layout.n_random);
  for (std::size_t fp = 0; fp < names.size(); ++fp) {
    const auto& src = layout.sources[fp];
    std::vector<double> vals = column(static_cast<int>(fp));
    if (!src.random) {
      double v = mean_of(vals, layout.info->positive[fp] ? 0.1 : 0.0);
      if (layout.info->positive[fp]) v = std::max(v, 1e-6);
      theta[src.index] = v;
      continue;
    }
    if (src.link == RandomLink::log_link) {
      for (auto& x : vals) x = std::log(std::max(x, 1e-8));
    }
    const double mu = mean_of(vals, 0.0);
    double sd = sd_of(vals, mu);
    if (!std::isfinite(sd) || sd <= 0.0) sd = 0.2 * (0.1 + std::abs(mu));
    sd = std::max(sd, 0.02 * (0.1 + std::abs(mu)));
    theta[layout.mu_offset() + src.index] = mu;
    theta[layout.sigma_offset() + src.index] = sd;
    linked_cols[src.index] = std::move(vals);
  }
  int k = layout.rho_offset();
  for (int i = 0; i < layout.n_random; ++i) {
    for (int j = i + 1; j < layout.n_random; ++j) {
      // pairwise correlation of per-unit estimates on the linked scale
      double rho = 0.0;
      const auto& a = linked_cols[i];
      const auto& b = linked_cols[j];
      if (a.size() == b.size() && a.size() >= 3) {
        const double ma = mean_of(a, 0.0), mb = mean_of(b, 0.0);
        double sab = 0, saa = 0, sbb = 0;
        for (std::size_t u = 0; u < a.size(); ++u) {
          sab += (a[u] - ma) * (b[u] - mb);
          saa += (a[u] - ma) * (a[u] - ma);
          sbb += (b[u] - mb) * (b[u] - mb);
        }
        if (saa > 0 && sbb > 0) rho = sab / std::sqrt(saa * sbb);
        rho = std::clamp(rho, -0.8, 0.8);
        if (!std::isfinite(rho)) rho = 0.0;
      }
      theta[k++] = rho;
    }
  }
  theta[layout.sigma_eps_offset()] = sigma_eps;
  return theta;
}

FitResult fit_gpm(const GpmModelSpec& spec, const RmdtDataset& data,
                  const GpmFitOptions& options) {
  const GpmEvaluator evaluator(spec, data, options.quadrature_order);
  const GpmLayout& layout = evaluator.layout();
  if (data.total_observations() < static_cast<std::size_t>(layout.dim())) {
    throw DomainError("fewer observations than free parameters");
  }

  const Vector init = options.init ? *options.init : gpm_initial_guess(spec, data);
  const Vector t0 = natural_to_transformed(spec, layout, init);

  const Objective objective = [&](const Vector& t) -> double {
    try {
      return -evaluator.loglik_natural(transformed_to_natural(layout, t));
    } catch (const Error&) {
      return kInf;
    }
  };

  const OptimResult opt = minimize(objective, t0, options.optim);

  FitResult fit;
  fit.param_names = gpm_param_names(spec);
  fit.estimates = transformed_to_natural(layout, opt.x);
  fit.loglik = -opt.fmin;
  fit.aic = 2.0 * layout.dim() - 2.0 * fit.loglik;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.seed = options.optim.seed;

  const Matrix hess = fd_hessian(objective, opt.x, 1e-4);
  const Matrix cov_t = robust_inverse(hess);
  const Matrix jac = fd_jacobian(
      [&](const Vector& t) { return transformed_to_natural(layout, t); }, opt.x);
  fit.covariance = psd_project(jac * cov_t * jac.transpose());
  fit.std_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

CdfCurve failure_cdf_linear(double alpha, double mu, double sigma,
                            double threshold, const Vector& times) {
  if (!(threshold > alpha)) {
    throw DomainError("threshold must exceed the intercept for the closed-form CDF");
  }
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  CdfCurve curve;
  curve.times = times;
  curve.cdf.resize(times.size());
  const double offset = std::log(threshold - alpha) - mu;
  for (Index i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0)) throw DomainError("closed-form CDF needs times > 0");
    curve.cdf[i] = normal_cdf((std::log(times[i]) - offset) / sigma);
  }
  return curve;
}

double realized_crossing_time(const PathModel& path,
                              const FailureThreshold& threshold) {
  try {
    const auto t = first_crossing_time(path, threshold);
    return t ? *t : kInf;
  } catch (const DomainError&) {
    // Path runs away from the threshold; it can only be past it at t = 0.
    const double d0 = evaluate(path, 0.0);
    const bool crossed = threshold.direction == Direction::increasing
                             ? d0 >= threshold.value
                             : d0 <= threshold.value;
    return crossed ? 0.0 : kInf;
  }
}

CdfCurve failure_cdf_mc(const GpmModelSpec& spec, const Vector& theta,
                        const FailureThreshold& threshold, const Vector& times,
                        std::int64_t draws, std::uint64_t seed,
                        const std::map<std::string, double>& covariates,
                        int threads) {
  if (draws < 10000) throw DomainError("failure_cdf_mc needs at least 1e4 draws");
  for (Index i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) throw DomainError("time grid must be ascending");
  }
  const GpmLayout layout = make_layout(spec);
  const NaturalParams p = unpack_natural(spec, layout, theta);
  const double x = unit_stress(spec, covariates, "<prediction>");
  const int d = layout.n_random;

  constexpr std::int64_t kChunk = 16384;
  const int nchunks = static_cast<int>((draws + kChunk - 1) / kChunk);
  const Index n_grid = times.size();
  std::vector<std::vector<std::int64_t>> counts(
      nchunks, std::vector<std::int64_t>(n_grid, 0));

  parallel_chunks(nchunks, threads, [&](int chunk) {
    Rng rng = Rng::stream(seed, "cdf-mc", static_cast<std::uint64_t>(chunk));
    const std::int64_t lo = chunk * kChunk;
    const std::int64_t hi = std::min<std::int64_t>(draws, lo + kChunk);
    std::vector<std::int64_t> hist(n_grid + 1, 0);
    Vector z(d), b(d);
    for (std::int64_t k = lo; k < hi; ++k) {
      for (int r = 0; r < d; ++r) z[r] = rng.normal();
      b = p.mu + p.chol * z;
      const PathModel path = build_path(spec, layout, p.fixed, b, x);
      const double tc = realized_crossing_time(path, threshold);
      // first grid index whose time is >= tc
      const Index pos = std::lower_bound(times.data(), times.data() + n_grid, tc) -
                        times.data();
      ++hist[pos];
    }
    std::int64_t running = 0;
    for (Index g = 0; g < n_grid; ++g) {
      running += hist[g];
      counts[chunk][g] = running;
    }
  });

  CdfCurve curve;
  curve.times = times;
  curve.cdf = Vector::Zero(n_grid);
  for (int c = 0; c < nchunks; ++c) {
    for (Index g = 0; g < n_grid; ++g) curve.cdf[g] += counts[c][g];
  }
  curve.cdf /= static_cast<double>(draws);
  return curve;
}

GpmDesign GpmDesign::balanced(int units, const std::vector<double>& times) {
  GpmDesign design;
  design.times.assign(units, times);
  design.covariates.assign(units, {});
  return design;
}

GpmDesign GpmDesign::from_dataset(const RmdtDataset& data) {
  GpmDesign design;
  for (const auto& u : data.units) {
    design.times.push_back(u.times);
    design.covariates.push_back(u.static_covariates);
  }
  return design;
}

RmdtDataset simulate_rmdt(const GpmModelSpec& spec, const Vector& truth,
                          const GpmDesign& design, std::uint64_t seed) {
  const GpmLayout layout = make_layout(spec);
  const NaturalParams p = unpack_natural(spec, layout, truth);
  if (design.times.empty()) throw DomainError("empty simulation design");
  if (!design.covariates.empty() && design.covariates.size() != design.times.size()) {
    throw DomainError("design covariates/times size mismatch");
  }
  const int d = layout.n_random;

  RmdtDataset data;
  char buf[32];
  for (std::size_t i = 0; i < design.times.size(); ++i) {
    Rng rng = Rng::stream(seed, "sim-unit", i);
    UnitSeries u;
    std::snprintf(buf, sizeof(buf), "u%04zu", i + 1);
    u.unit_id = buf;
    u.static_covariates =
        design.covariates.empty() ? std::map<std::string, double>{} : design.covariates[i];
    const double x = unit_stress(spec, u.static_covariates, u.unit_id);
    Vector z(d), b(d);
    for (int r = 0; r < d; ++r) z[r] = rng.normal();
    b = p.mu + p.chol * z;
    const PathModel path = build_path(spec, layout, p.fixed, b, x);
    for (const double t : design.times[i]) {
      u.times.push_back(t);
      u.measurements.push_back(evaluate(path, t) + p.sigma_eps * rng.normal());
    }
    data.units.push_back(std::move(u));
  }
  return data;
}

BootstrapCdf bootstrap_ci(const FitResult& fit, const GpmModelSpec& spec,
                          const RmdtDataset& data,
                          const FailureThreshold& threshold, const Vector& times,
                          const BootstrapOptions& options,
                          const std::map<std::string, double>& covariates) {
  if (options.replicates < 200) {
    throw DomainError("bootstrap_ci needs at least 200 replicates");
  }
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw DomainError("bootstrap level must lie in (0,1)");
  }
  const GpmDesign design = GpmDesign::from_dataset(data);
  const bool closed_form = is_lognormal_rate_linear(spec) &&
                           threshold.direction == Direction::increasing;

  const auto curve_for = [&](const Vector& theta, std::uint64_t cdf_seed) {
    if (closed_form) {
      const GpmLayout layout = make_layout(spec);
      return failure_cdf_linear(theta[0], theta[layout.mu_offset()],
                                theta[layout.sigma_offset()], threshold.value,
                                times)
          .cdf;
    }
    return failure_cdf_mc(spec, theta, threshold, times, options.mc_draws,
                          cdf_seed, covariates, 1)
        .cdf;
  };

  const int B = options.replicates;
  std::vector<Vector> replicate_cdf(B);
  std::vector<char> kept(B, 0);
  parallel_chunks(B, options.threads, [&](int r) {
    const std::uint64_t r64 = static_cast<std::uint64_t>(r);
    try {
      const RmdtDataset sim = simulate_rmdt(
          spec, fit.estimates, design,
          splitmix64(options.seed ^ splitmix64(0x626f6f74ULL + r64)));
      GpmFitOptions refit = options.refit;
      refit.optim.seed = splitmix64(options.seed + 0x9e37ULL * (r64 + 1));
      if (!refit.init) refit.init = fit.estimates;
      const FitResult rf = fit_gpm(spec, sim, refit);
      if (!rf.converged) return;  // dropped
      replicate_cdf[r] =
          curve_for(rf.estimates, splitmix64(options.seed ^ (0xcdfULL + r64)));
      kept[r] = 1;
    } catch (const Error&) {
      // dropped replicate
    }
  });

  BootstrapCdf out;
  out.replicates = B;
  out.curve.times = times;
  out.curve.level = options.level;
  out.curve.cdf = curve_for(fit.estimates, splitmix64(options.seed ^ 0xcdf0ULL));

  std::vector<int> keep_idx;
  for (int r = 0; r < B; ++r) {
    if (kept[r]) keep_idx.push_back(r);
  }
  out.dropped = B - static_cast<int>(keep_idx.size());
  out.degraded = out.dropped > B / 5;
  if (keep_idx.empty()) throw NumericError("all bootstrap replicates failed");

  const double q_lo = (1.0 - options.level) / 2.0;
  const double q_hi = 1.0 - q_lo;
  const auto percentile = [](std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };

  Vector lower(times.size()), upper(times.size());
  std::vector<double> vals(keep_idx.size());
  for (Index g = 0; g < times.size(); ++g) {
    for (std::size_t k = 0; k < keep_idx.size(); ++k) {
      vals[k] = replicate_cdf[keep_idx[k]][g];
    }
    lower[g] = std::clamp(percentile(vals, q_lo), 0.0, out.curve.cdf[g]);
    upper[g] = std::clamp(percentile(vals, q_hi), out.curve.cdf[g], 1.0);
  }
  out.curve.lower = lower;
  out.curve.upper = upper;
  return out;
}

}  // namespace degrade
