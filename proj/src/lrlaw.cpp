#include "scalelaw/lrlaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "scalelaw/format.hpp"

namespace scalelaw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool has_filled_3x3(const std::vector<double>& losses, std::size_t rows, std::size_t cols) {
  for (std::size_t a = 0; a < cols; ++a)
    for (std::size_t b = a + 1; b < cols; ++b)
      for (std::size_t c = b + 1; c < cols; ++c) {
        int full = 0;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* row = &losses[r * cols];
          if (std::isfinite(row[a]) && std::isfinite(row[b]) && std::isfinite(row[c])) ++full;
        }
        if (full >= 3) return true;
      }
  return false;
}

// Cell index and weight of x on a sorted log grid; nullopt outside.
std::optional<std::pair<std::size_t, double>> locate(const std::vector<double>& grid, double x) {
  if (!(x >= grid.front() && x <= grid.back())) return std::nullopt;
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  if (i == grid.size()) return std::make_pair(grid.size() - 2, 1.0);
  --i;
  const double t = (std::log(x) - std::log(grid[i])) / (std::log(grid[i + 1]) - std::log(grid[i]));
  return std::make_pair(i, t);
}

// Weighted blend of two values, ignoring a zero-weight side even if missing.
double blend(double a, double b, double t) {
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  return (1.0 - t) * a + t * b;
}

}  // namespace

LossSurface::LossSurface(double d_checkpoint, std::vector<double> grid_B,
                         std::vector<double> grid_LR, std::vector<double> losses, double base_lr)
    : d_checkpoint_(d_checkpoint),
      grid_B_(std::move(grid_B)),
      grid_LR_(std::move(grid_LR)),
      losses_(std::move(losses)),
      base_lr_(base_lr) {
  if (losses_.size() != grid_B_.size() * grid_LR_.size())
    throw ValidationError("surface has " + std::to_string(losses_.size()) + " cells for a " +
                          std::to_string(grid_B_.size()) + "x" + std::to_string(grid_LR_.size()) +
                          " grid");
  if (!(base_lr_ > 0.0)) throw ValidationError("surface base LR must be positive");
  for (const auto* g : {&grid_B_, &grid_LR_}) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (!((*g)[i] > 0.0)) throw ValidationError("surface grid values must be positive");
      if (i > 0 && !((*g)[i] > (*g)[i - 1]))
        throw ValidationError("surface grid must be strictly increasing");
    }
  }
  for (double& l : losses_) {
    if (!std::isfinite(l)) {
      l = kNaN;
    } else if (!(l > 0.0)) {
      throw ValidationError("surface losses must be positive");
    }
  }
  if (grid_B_.size() < 3 || grid_LR_.size() < 3 ||
      !has_filled_3x3(losses_, grid_B_.size(), grid_LR_.size()))
    throw InsufficientDataError("surface needs a filled 3x3 subgrid");
}

bool LossSurface::missing(std::size_t i_b, std::size_t j_lr) const {
  return std::isnan(at(i_b, j_lr));
}

std::optional<double> LossSurface::operator()(double B, double lr_scale) const {
  const auto pb = locate(grid_B_, B);
  const auto pl = locate(grid_LR_, lr_scale);
  if (!pb || !pl) return std::nullopt;
  const auto [i, t] = *pb;
  const auto [j, u] = *pl;
  const double lo = blend(at(i, j), at(i, j + 1), u);
  const double hi = blend(at(i + 1, j), at(i + 1, j + 1), u);
  const double v = blend(lo, hi, t);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

LossSurface build_surface(const RunSet& runs, double d_checkpoint, const SurfaceOptions& options) {
  if (runs.empty()) throw InsufficientDataError("surface needs runs");
  if (!(d_checkpoint > 0.0)) throw ValidationError("checkpoint tokens must be positive");
  const auto sizes = runs.model_sizes();
  if (sizes.size() != 1)
    throw ValidationError("surface runs must share one model size, got " +
                          std::to_string(sizes.size()));

  double base_lr = std::numeric_limits<double>::infinity();
  for (const auto& [id, run] : runs) base_lr = std::min(base_lr, run.lr_peak);
  if (options.base_lr) base_lr = *options.base_lr;
  if (!(base_lr > 0.0)) throw ValidationError("base LR must be positive");

  // Merge LR scale factors that differ only by rounding.
  std::vector<double> batches, scales;
  for (const auto& [id, run] : runs) {
    batches.push_back(run.batch_size_tokens);
    scales.push_back(run.lr_peak / base_lr);
  }
  auto unique_sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
      if (out.empty() || x > out.back() * (1.0 + 1e-9)) out.push_back(x);
    return out;
  };
  const auto grid_B = unique_sorted(batches);
  const auto grid_LR = unique_sorted(scales);
  auto index_of = [](const std::vector<double>& grid, double x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (std::abs(std::log(grid[i] / x)) < std::abs(std::log(grid[best] / x))) best = i;
    return best;
  };

  std::vector<double> losses(grid_B.size() * grid_LR.size(), kNaN);
  for (const auto& [id, run] : runs) {
    if (run.diverged || run.points.empty()) continue;
    const auto curve = options.smooth ? smooth_run(run) : run.points;
    const auto l = loss_at_tokens(curve, d_checkpoint);
    if (!l || !std::isfinite(*l) || *l > 2.0 * run.points.front().loss) continue;
    double& cell = losses[index_of(grid_B, run.batch_size_tokens) * grid_LR.size() +
                          index_of(grid_LR, run.lr_peak / base_lr)];
    if (std::isnan(cell) || *l < cell) cell = *l;
  }
  return LossSurface(d_checkpoint, grid_B, grid_LR, std::move(losses), base_lr);
}

std::vector<LrOptSample> extract_lr_opt(const LossSurface& surface, int refinement) {
  if (refinement < 1) throw ValidationError("refinement must be >= 1");
  const auto& gb = surface.grid_B();
  const auto& gl = surface.grid_LR();
  std::vector<double> bs;
  for (std::size_t i = 0; i + 1 < gb.size(); ++i)
    for (int k = 0; k < refinement; ++k)
      bs.push_back(k == 0 ? gb[i] : std::exp(std::log(gb[i]) +
                            (std::log(gb[i + 1]) - std::log(gb[i])) * k / refinement));
  bs.push_back(gb.back());

  std::vector<LrOptSample> out;
  std::vector<double> col(gl.size());
  for (double B : bs) {
    const auto loc = locate(gb, B);
    if (!loc) continue;
    const auto [i, t] = *loc;
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < gl.size(); ++j) {
      col[j] = blend(surface.at(i, j), surface.at(i + 1, j), t);
      if (!std::isnan(col[j]) && (!best || col[j] < col[*best])) best = j;
    }
    if (!best) continue;
    const std::size_t j = *best;
    LrOptSample s;
    s.B = B;
    if (j == 0 || j + 1 == gl.size() || std::isnan(col[j - 1]) || std::isnan(col[j + 1])) {
      s.boundary = true;
      s.lr_scale = gl[j];
      s.loss = col[j];
    } else {
      const double x1 = std::log(gl[j - 1]), x2 = std::log(gl[j]), x3 = std::log(gl[j + 1]);
      const double f1 = col[j - 1], f2 = col[j], f3 = col[j + 1];
      const double d12 = (f2 - f1) / (x2 - x1), d23 = (f3 - f2) / (x3 - x2);
      const double a = (d23 - d12) / (x3 - x1);
      double xv = x2, fv = f2;
      if (a > 0.0) {
        const double b = d12 - a * (x1 + x2);
        xv = -b / (2.0 * a);
        fv = f2 + (xv - x2) * (d12 + a * (xv - x1));
      }
      s.lr_scale = std::exp(xv);
      s.loss = fv;
    }
    s.lr = s.lr_scale * surface.base_lr();
    out.push_back(s);
  }
  return out;
}

GammaFit fit_gamma(std::span<const LrOptSample> samples, const GammaOptions& options) {
  std::vector<LrOptSample> s;
  for (const auto& x : samples)
    if (!x.boundary) s.push_back(x);
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.B < b.B; });
  if (s.size() < 4)
    throw InsufficientDataError("gamma fit needs >= 4 non-boundary samples, got " +
                                std::to_string(s.size()));

  std::size_t start = s.size();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = s.size(); i-- > 0;) {
    const double nlo = std::min(lo, s[i].lr), nhi = std::max(hi, s[i].lr);
    if (nhi / nlo - 1.0 >= options.plateau_tolerance) break;
    lo = nlo;
    hi = nhi;
    start = i;
  }
  GammaFit fit;
  const bool plateau = s.size() - start >= options.plateau_min_samples &&
                       s.back().B / s[start].B >= options.plateau_min_span;
  if (plateau) {
    double sum = 0.0;
    for (std::size_t i = start; i < s.size(); ++i) sum += s[i].lr;
    fit.lr_ceiling = sum / static_cast<double>(s.size() - start);
    fit.plateau_onset_B = s[start].B;
  } else {
    start = s.size();
  }

  if (start < 2 || s[start - 1].B == s[0].B) {
    const double ceiling = fit.lr_ceiling.value_or(s.back().lr);
    throw GammaUndefinedError("every LR_opt sample lies on the plateau; gamma undefined",
                              ceiling, fit.plateau_onset_B.value_or(s.front().B));
  }
  double mx = 0, my = 0;
  const double n = static_cast<double>(start);
  for (std::size_t i = 0; i < start; ++i) {
    mx += std::log(s[i].B);
    my += std::log(s[i].lr);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < start; ++i) {
    const double dx = std::log(s[i].B) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(s[i].lr) - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0;
  for (std::size_t i = 0; i < start; ++i) {
    const double r = std::log(s[i].lr) - my - slope * (std::log(s[i].B) - mx);
    ssr += r * r;
  }
  fit.gamma = slope;
  fit.gamma_stderr = start > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  fit.samples_used = start;
  return fit;
}

LrScaleRule lr_scale_rule_from_string(const std::string& s) {
  if (s == "linear") return LrScaleRule::linear;
  if (s == "sqrt") return LrScaleRule::sqrt;
  if (s == "none") return LrScaleRule::none;
  throw ValidationError("unknown LR scaling rule '" + s + "' (expected linear, sqrt or none)");
}

std::string to_string(LrScaleRule rule) {
  switch (rule) {
    case LrScaleRule::linear: return "linear";
    case LrScaleRule::sqrt: return "sqrt";
    case LrScaleRule::none: return "none";
  }
  return "none";
}

double scale_lr(double base_lr, double base_B, double new_B, LrScaleRule rule) {
  if (!(base_lr > 0.0 && base_B > 0.0 && new_B > 0.0))
    throw ValidationError("scale_lr needs positive inputs");
  switch (rule) {
    case LrScaleRule::linear: return base_lr * (new_B / base_B);
    case LrScaleRule::sqrt: return base_lr * std::sqrt(new_B / base_B);
    case LrScaleRule::none: return base_lr;
  }
  return base_lr;
}

std::string surface_csv(const LossSurface& surface) {
  std::string out = "B,lr_scale,lr,loss\n";
  for (std::size_t i = 0; i < surface.grid_B().size(); ++i)
    for (std::size_t j = 0; j < surface.grid_LR().size(); ++j) {
      const double lr = surface.grid_LR()[j];
      out += format_double(surface.grid_B()[i]) + "," + format_double(lr) + "," +
             format_double(lr * surface.base_lr()) + "," +
             (surface.missing(i, j) ? std::string() : format_double(surface.at(i, j))) + "\n";
    }
  return out;
}

std::string lr_opt_csv(std::span<const LrOptSample> samples) {
  std::string out = "B,lr_scale,lr,loss,boundary\n";
  for (const auto& s : samples)
    out += format_double(s.B) + "," + format_double(s.lr_scale) + "," + format_double(s.lr) +
           "," + format_double(s.loss) + "," + (s.boundary ? "1" : "0") + "\n";
  return out;
}

}  // namespace scalelaw
