#include "scalelaw/bslaw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "scalelaw/error.hpp"
#include "scalelaw/format.hpp"

namespace scalelaw {

Contour iso_loss_contour(std::span<const RunCurve> curves, double loss_level,
                         const ContourOptions& options) {
  if (curves.empty()) throw InsufficientDataError("contour needs at least one run");
  const double n_params = curves.front().n_params;
  std::map<double, std::vector<const RunCurve*>> by_batch;
  for (const auto& c : curves) {
    if (c.n_params != n_params)
      throw ValidationError("contour runs must share one model size, got " +
                            format_double(n_params) + " and " + format_double(c.n_params));
    by_batch[c.batch_size_tokens].push_back(&c);
  }

  Contour contour;
  contour.loss_level = loss_level;
  for (const auto& [batch, group] : by_batch) {
    ContourPoint best{loss_level, batch, std::numeric_limits<double>::infinity(), {}};
    for (const RunCurve* c : group) {
      if (options.policy == LrPolicy::fixed_scheme && c->lr_scheme != options.scheme) continue;
      try {
        const double d = tokens_at_loss(c->points, loss_level);
        if (d < best.D_required) {
          best.D_required = d;
          best.run_id = c->run_id;
        }
      } catch (const RangeError&) {
      }
    }
    if (std::isfinite(best.D_required))
      contour.points.push_back(best);
    else
      contour.gaps.push_back(batch);
  }
  if (contour.points.empty())
    throw InsufficientDataError("empty contour: loss " + format_double(loss_level) +
                                " is reached at no batch size");
  return contour;
}

ContourVertex fit_contour_parabola(std::span<const ContourPoint> points) {
  if (points.size() < 3)
    throw InsufficientDataError("parabola fit needs >= 3 contour points, got " +
                                std::to_string(points.size()));
  double mean = 0.0;
  for (const auto& p : points) mean += std::log(p.B);
  mean /= static_cast<double>(points.size());

  // Normal equations for y = a x^2 + b x + c with x centred on the mean log B.
  std::array<double, 5> sx{};
  std::array<double, 3> sy{};
  double b_lo = std::numeric_limits<double>::infinity(), b_hi = 0.0;
  for (const auto& p : points) {
    const double x = std::log(p.B) - mean, y = std::log(p.D_required);
    double xp = 1.0;
    for (int i = 0; i < 5; ++i, xp *= x) sx[i] += xp;
    sy[0] += y;
    sy[1] += x * y;
    sy[2] += x * x * y;
    b_lo = std::min(b_lo, p.B);
    b_hi = std::max(b_hi, p.B);
  }
  std::array<std::array<double, 4>, 3> m{{{sx[4], sx[3], sx[2], sy[2]},
                                          {sx[3], sx[2], sx[1], sy[1]},
                                          {sx[2], sx[1], sx[0], sy[0]}}};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    if (std::abs(m[col][col]) < 1e-300)
      throw InsufficientDataError("parabola fit needs >= 3 distinct batch sizes");
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  const double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1], c = m[2][3] / m[2][2];
  if (!(a > 1e-12))
    throw NumericalError("contour at loss " + format_double(points.front().loss_level) +
                         " has no interior minimum (curvature " + format_double(a) + ")");
  const double xv = -b / (2.0 * a);
  ContourVertex v;
  v.loss_level = points.front().loss_level;
  v.B_star = std::exp(xv + mean);
  v.D_star = std::exp(c - b * b / (4.0 * a));
  v.curvature = a;
  v.extrapolated = v.B_star < b_lo || v.B_star > b_hi;
  return v;
}

double BoptLaw::operator()(double D) const {
  const double linear = D / s_floor;
  if (!power_fitted) return linear;
  return std::min(linear, k * std::pow(D, p));
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

}  // namespace

BoptLaw fit_bopt_law(std::span<const ContourVertex> vertices, const BoptFitOptions& options) {
  if (vertices.size() < 4)
    throw InsufficientDataError("B_opt law needs >= 4 vertices, got " +
                                std::to_string(vertices.size()));
  BoptLaw law;
  law.D_min = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) {
    law.D_min = std::min(law.D_min, v.D_star);
    law.D_max = std::max(law.D_max, v.D_star);
  }
  if (law.D_max < 10.0 * law.D_min)
    throw InsufficientDataError("B_opt vertices must span at least one decade of D");

  std::vector<double> linear_steps, power_d, power_b;
  for (const auto& v : vertices) {
    const double steps = v.D_star / v.B_star;
    if (steps >= options.band_lo && steps <= options.band_hi) {
      linear_steps.push_back(steps);
    } else {
      power_d.push_back(v.D_star);
      power_b.push_back(v.B_star);
    }
  }

  if (options.s_floor_hint) {
    if (!(*options.s_floor_hint > 0.0)) throw ValidationError("s_floor hint must be positive");
    law.s_floor = *options.s_floor_hint;
    law.linear_fitted = true;
  } else if (!linear_steps.empty()) {
    law.s_floor = median(linear_steps);
    law.linear_fitted = true;
  } else {
    law.s_floor = options.default_s_floor;
  }

  law.crossover_D = std::numeric_limits<double>::infinity();
  if (power_d.size() >= 2 &&
      *std::max_element(power_d.begin(), power_d.end()) >
          *std::min_element(power_d.begin(), power_d.end())) {
    const PowerLaw fit = fit_power_law(power_d, power_b);
    law.k = fit.k;
    law.p = fit.p;
    law.power_fitted = true;
    if (!(law.p < 1.0))
      throw NumericalError("B_opt exponent " + format_double(law.p) +
                           " leaves no linear regime");
    law.crossover_D = std::pow(law.k * law.s_floor, 1.0 / (1.0 - law.p));
  }
  return law;
}

PowerLaw derive_sopt(const BoptLaw& law) {
  if (!law.power_fitted) throw ValidationError("B_opt law has no fitted power branch");
  PowerLaw s;
  s.k = 1.0 / law.k;
  s.p = 1.0 - law.p;
  s.x_min = std::max(law.crossover_D, law.D_min);
  s.x_max = law.D_max;
  return s;
}

std::vector<double> default_loss_levels(std::span<const RunCurve> curves, int count,
                                        double lo_percentile, double hi_percentile) {
  std::vector<double> finals;
  for (const auto& c : curves)
    if (!c.points.empty() && std::isfinite(c.points.back().loss))
      finals.push_back(c.points.back().loss);
  if (finals.empty()) throw InsufficientDataError("no finished curves to pick loss levels");
  if (count < 1) throw ValidationError("loss level count must be >= 1");
  const double lo = percentile(finals, lo_percentile), hi = percentile(finals, hi_percentile);
  std::vector<double> levels;
  for (int i = 0; i < count; ++i)
    levels.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return levels;
}

namespace {

std::span<const ContourPoint> window_around_minimum(std::span<const ContourPoint> points,
                                                    std::size_t width) {
  if (width == 0 || width >= points.size()) return points;
  const auto lowest = std::min_element(points.begin(), points.end(),
                                       [](const ContourPoint& a, const ContourPoint& b) {
                                         return a.D_required < b.D_required;
                                       });
  const std::size_t centre = static_cast<std::size_t>(lowest - points.begin());
  std::size_t start = centre > width / 2 ? centre - width / 2 : 0;
  start = std::min(start, points.size() - width);
  return points.subspan(start, width);
}

}  // namespace

BoptReport bopt_pipeline(std::span<const RunCurve> curves, const BoptPipelineOptions& options) {
  BoptReport report;
  report.loss_levels =
      options.loss_levels.empty() ? default_loss_levels(curves) : options.loss_levels;

  std::map<double, std::vector<RunCurve>> by_model;
  for (const auto& c : curves) by_model[c.n_params].push_back(c);

  std::vector<ContourVertex> pooled;
  for (const auto& [n_params, group] : by_model) {
    BoptModelResult result;
    result.n_params = n_params;
    const std::string tag = "N=" + format_double(n_params);
    for (double level : report.loss_levels) {
      Contour contour;
      try {
        contour = iso_loss_contour(group, level, options.contour);
      } catch (const InsufficientDataError&) {
        report.warnings.push_back(tag + ": loss " + format_double(level) + " not reached");
        continue;
      }
      try {
        const ContourVertex v =
            fit_contour_parabola(window_around_minimum(contour.points, options.vertex_window));
        result.vertices.push_back(v);
        if (v.extrapolated && !options.include_extrapolated)
          report.warnings.push_back(tag + ": vertex at loss " + format_double(level) +
                                    " lies outside the observed batch sizes; not fitted");
        else
          pooled.push_back(v);
      } catch (const Error& e) {
        report.warnings.push_back(tag + ": " + e.what());
      }
      result.contours.push_back(std::move(contour));
    }
    std::vector<ContourVertex> usable;
    for (const auto& v : result.vertices)
      if (!v.extrapolated || options.include_extrapolated) usable.push_back(v);
    try {
      result.law = fit_bopt_law(usable, options.fit);
    } catch (const Error& e) {
      report.warnings.push_back(tag + ": no per-size law (" + e.what() + ")");
    }
    report.models.push_back(std::move(result));
  }
  report.pooled = fit_bopt_law(pooled, options.fit);
  return report;
}

std::string contour_csv(std::span<const Contour> contours,
                        std::span<const ContourVertex> vertices) {
  std::string out = "kind,loss_level,B,D_required,is_fitted_extrapolation\n";
  for (const auto& c : contours)
    for (const auto& p : c.points)
      out += "point," + format_double(p.loss_level) + "," + format_double(p.B) + "," +
             format_double(p.D_required) + ",0\n";
  for (const auto& v : vertices)
    out += "vertex," + format_double(v.loss_level) + "," + format_double(v.B_star) + "," +
           format_double(v.D_star) + "," + (v.extrapolated ? "1" : "0") + "\n";
  return out;
}

}  // namespace scalelaw
