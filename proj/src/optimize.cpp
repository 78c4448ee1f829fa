#include "degrade/optimize.hpp"

#include "degrade/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace degrade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const Vector& x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isnan(v) ? kInf : v;
}

struct NmOutcome {
  Vector x;
  double fmin = kInf;
  double spread = kInf;
  bool hit_tol = false;
};

NmOutcome nelder_mead(const Objective& f, const Vector& x0,
                      const OptimOptions& opts, int& evals) {
  const int n = static_cast<int>(x0.size());
  const double alpha = 1.0, gamma = 2.0, beta = 0.5, delta = 0.5;

  std::vector<Vector> simplex(n + 1, x0);
  for (int i = 0; i < n; ++i) {
    simplex[i + 1][i] += 0.1 * std::max(std::abs(x0[i]), 0.1);
  }
  std::vector<double> fv(n + 1);
  for (int i = 0; i <= n; ++i) fv[i] = safe_eval(f, simplex[i], evals);

  std::vector<int> order(n + 1);
  NmOutcome out;
  for (int iter = 0; iter < opts.max_iter_nm; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];

    out.spread = fv[worst] - fv[best];
    if (std::isfinite(fv[best]) && out.spread <= opts.nm_tol) {
      out.hit_tol = true;
      break;
    }

    Vector centroid = Vector::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= n;

    const Vector xr = centroid + alpha * (centroid - simplex[worst]);
    const double fr = safe_eval(f, xr, evals);
    if (fr < fv[best]) {
      const Vector xe = centroid + gamma * (xr - centroid);
      const double fe = safe_eval(f, xe, evals);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const Vector base = outside ? xr : simplex[worst];
      const Vector xc = centroid + beta * (base - centroid);
      const double fc = safe_eval(f, xc, evals);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + delta * (simplex[i] - simplex[best]);
          fv[i] = safe_eval(f, simplex[i], evals);
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  out.fmin = *it;
  out.x = simplex[static_cast<int>(it - fv.begin())];
  return out;
}

struct BfgsOutcome {
  Vector x;
  double fmin;
  Vector grad;
};

BfgsOutcome bfgs_polish(const Objective& f, const Vector& x0, double f0,
                        const OptimOptions& opts, int& evals) {
  const int n = static_cast<int>(x0.size());
  Vector x = x0;
  double fx = f0;
  Vector g = fd_gradient(f, x, opts.fd_step);
  evals += 2 * n;
  Matrix hinv = Matrix::Identity(n, n);

  for (int iter = 0; iter < opts.max_iter_bfgs; ++iter) {
    if (!g.allFinite() || g.norm() < 0.1 * opts.grad_tol) break;
    Vector direction = -hinv * g;
    if (direction.dot(g) >= 0.0) {  // not a descent direction; reset
      hinv.setIdentity();
      direction = -g;
    }
    double step = 1.0;
    double fnew = kInf;
    Vector xnew;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xnew = x + step * direction;
      fnew = safe_eval(f, xnew, evals);
      if (fnew <= fx + 1e-4 * step * g.dot(direction)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(fnew < fx)) break;

    Vector gnew = fd_gradient(f, xnew, opts.fd_step);
    evals += 2 * n;
    const Vector s = xnew - x;
    const Vector y = gnew - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Matrix eye = Matrix::Identity(n, n);
      const Matrix v = eye - (s * y.transpose()) / sy;
      hinv = v * hinv * v.transpose() + (s * s.transpose()) / sy;
    }
    x = xnew;
    fx = fnew;
    g = gnew;
  }
  return {x, fx, g};
}

}  // namespace

OptimResult minimize(const Objective& f, const Vector& x0,
                     const OptimOptions& opts) {
  if (x0.size() == 0) throw DomainError("minimize: empty parameter vector");
  int evals = 0;

  NmOutcome best;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Vector start = x0;
    if (r > 0) {
      Rng rng = Rng::stream(opts.seed, "optim-restart", static_cast<std::uint64_t>(r));
      for (Index i = 0; i < start.size(); ++i) {
        start[i] += opts.restart_spread * std::max(std::abs(x0[i]), 1.0) * rng.normal();
      }
    }
    NmOutcome cur = nelder_mead(f, start, opts, evals);
    if (cur.fmin < best.fmin) best = cur;
  }
  if (!best.x.size()) best.x = x0;

  BfgsOutcome polished = bfgs_polish(f, best.x, best.fmin, opts, evals);

  OptimResult result;
  result.fmin = polished.fmin;
  result.x = polished.x;
  result.iterations = evals;
  result.nm_spread = best.spread;
  result.grad_norm = polished.grad.allFinite() ? polished.grad.norm() : kInf;
  result.converged = best.hit_tol && result.grad_norm < opts.grad_tol &&
                     std::isfinite(result.fmin);
  return result;
}

Vector fd_gradient(const Objective& f, const Vector& x, double rel_step) {
  const int n = static_cast<int>(x.size());
  Vector g(n);
  Vector xp = x;
  for (int i = 0; i < n; ++i) {
    const double h = rel_step * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix fd_hessian(const Objective& f, const Vector& x, double rel_step) {
  const int n = static_cast<int>(x.size());
  Vector h(n);
  for (int i = 0; i < n; ++i) h[i] = rel_step * std::max(std::abs(x[i]), 1.0);
  const double f0 = f(x);
  Matrix hess(n, n);
  Vector xp = x;
  for (int i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (int j = i + 1; j < n; ++j) {
      xp[i] = x[i] + h[i];
      xp[j] = x[j] + h[j];
      const double fpp = f(xp);
      xp[j] = x[j] - h[j];
      const double fpm = f(xp);
      xp[i] = x[i] - h[i];
      const double fmm = f(xp);
      xp[j] = x[j] + h[j];
      const double fmp = f(xp);
      xp[i] = x[i];
      xp[j] = x[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return hess;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& map,
                   const Vector& x, double rel_step) {
  const int n = static_cast<int>(x.size());
  Vector xp = x;
  Matrix jac;
  for (int i = 0; i < n; ++i) {
    const double h = rel_step * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    const Vector fp = map(xp);
    xp[i] = x[i] - h;
    const Vector fm = map(xp);
    xp[i] = x[i];
    if (jac.size() == 0) jac.resize(fp.size(), n);
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace degrade
