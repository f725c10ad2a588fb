#include "minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scalelaw::detail {

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

Mat identity(std::size_t n) {
  Mat m(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x, double rel_step) {
  Vec g(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
    if (!std::isfinite(g[i])) g[i] = 0.0;
  }
  return g;
}

}  // namespace

MinimizeResult bfgs(const std::function<double(const Vec&)>& f, Vec x0,
                    const MinimizeOptions& options) {
  const std::size_t n = x0.size();
  MinimizeResult result;
  result.x = std::move(x0);
  result.value = f(result.x);
  if (!std::isfinite(result.value)) return result;

  Mat hinv = identity(n);
  Vec g = gradient(f, result.x, options.gradient_step);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    Vec dir(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dir[i] -= hinv[i][j] * g[j];
    double slope = dot(dir, g);
    if (!(slope < 0.0)) {
      hinv = identity(n);
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = dot(dir, g);
      if (!(slope < 0.0)) {
        result.converged = true;
        return result;
      }
    }

    double step = 1.0;
    Vec trial(n);
    double trial_value = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = result.x[i] + step * dir[i];
      trial_value = f(trial);
      if (std::isfinite(trial_value) && trial_value <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No further decrease along a descent direction: at numerical precision.
      result.converged = true;
      return result;
    }

    const double improvement = result.value - trial_value;
    Vec s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = trial[i] - result.x[i];
    Vec g_new = gradient(f, trial, options.gradient_step);
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = g_new[i] - g[i];
    result.x = trial;
    result.value = trial_value;
    g = std::move(g_new);

    if (improvement < options.tolerance) {
      result.converged = true;
      return result;
    }

    const double sy = dot(s, y);
    if (sy > 1e-300) {
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      Vec hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hy[i] += hinv[i][j] * y[j];
      const double yhy = dot(y, hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          hinv[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
    }
  }
  return result;
}

}  // namespace scalelaw::detail
