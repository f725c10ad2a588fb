#include "scalelaw/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "scalelaw/error.hpp"
#include "scalelaw/format.hpp"

namespace scalelaw {

double PowerLaw::operator()(double x) const { return k * std::pow(x, p); }

PowerLaw fit_power_law(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw InsufficientDataError("power-law regression needs >= 2 paired points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0 && ys[i] > 0.0))
      throw ValidationError("power-law regression needs positive values");
    sx += std::log(xs[i]);
    sy += std::log(ys[i]);
  }
  const double n = static_cast<double>(xs.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(ys[i]) - my);
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("power-law regression needs distinct x values");
  PowerLaw law;
  law.p = sxy / sxx;
  law.k = std::exp(my - law.p * mx);
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  law.x_min = *lo;
  law.x_max = *hi;
  return law;
}

std::vector<double> compute_grid(std::span<const RunCurve> curves, int per_decade) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    lo = std::min(lo, flops(c.n_params, c.points.front().tokens));
    hi = std::max(hi, flops(c.n_params, c.points.back().tokens));
  }
  if (!(hi > lo)) throw InsufficientDataError("no compute range to grid");
  const double start = std::ceil(std::log10(lo) * per_decade);
  const double stop = std::floor(std::log10(hi) * per_decade);
  std::vector<double> grid;
  for (double i = start; i <= stop; i += 1.0) grid.push_back(std::pow(10.0, i / per_decade));
  return grid;
}

namespace {

std::optional<double> loss_at_compute(const RunCurve& c, double compute) {
  return loss_at_tokens(c.points, compute / (6.0 * c.n_params));
}

}  // namespace

std::vector<EnvelopeSample> compute_envelope(std::span<const RunCurve> curves,
                                             std::span<const double> grid) {
  std::vector<EnvelopeSample> out;
  for (double compute : grid) {
    const RunCurve* best = nullptr;
    double best_loss = std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
      auto l = loss_at_compute(c, compute);
      if (l && *l < best_loss) {
        best_loss = *l;
        best = &c;
      }
    }
    if (best) out.push_back({compute, best_loss, best->run_id});
  }
  if (out.empty()) throw InsufficientDataError("empty envelope: grid lies outside every curve");
  return out;
}

std::string envelope_csv(std::span<const EnvelopeSample> envelope) {
  std::string out = "C,loss,winner\n";
  for (const auto& s : envelope)
    out += format_double(s.C) + "," + format_double(s.loss) + "," + s.winner + "\n";
  return out;
}

namespace {

struct WinningInterval {
  double n_params = 0.0;
  std::size_t start = 0;
  std::size_t len = 0;   // 0: the model never wins
  std::size_t pieces = 0;
};

struct ModelIndex {
  std::map<std::string, const RunCurve*> by_id;
  std::map<double, std::vector<const RunCurve*>> by_model;
};

ModelIndex index_models(std::span<const RunCurve> curves) {
  ModelIndex idx;
  for (const auto& c : curves) {
    idx.by_id[c.run_id] = &c;
    idx.by_model[c.n_params].push_back(&c);
  }
  if (idx.by_model.size() < 2)
    throw InsufficientDataError("frontier needs >= 2 distinct model sizes");
  return idx;
}

// Longest contiguous stretch of envelope samples won by each model, ascending N.
std::vector<WinningInterval> winning_intervals(std::span<const EnvelopeSample> envelope,
                                               const ModelIndex& idx) {
  std::vector<double> owner(envelope.size(), 0.0);
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    auto it = idx.by_id.find(envelope[i].winner);
    if (it != idx.by_id.end()) owner[i] = it->second->n_params;
  }
  std::vector<WinningInterval> out;
  for (const auto& entry : idx.by_model) {
    WinningInterval w{entry.first};
    for (std::size_t i = 0; i < envelope.size();) {
      if (owner[i] != w.n_params) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < envelope.size() && owner[j] == w.n_params) ++j;
      ++w.pieces;
      if (j - i > w.len) {
        w.len = j - i;
        w.start = i;
      }
      i = j;
    }
    out.push_back(w);
  }
  return out;
}

void note_fragments(const WinningInterval& w, FrontierExtraction& result) {
  if (w.pieces > 1)
    result.warnings.push_back("model N=" + format_double(w.n_params) + " wins " +
                              std::to_string(w.pieces) +
                              " separate intervals; using the longest");
}

void note_excluded(double n_params, FrontierExtraction& result) {
  result.excluded_models.push_back(n_params);
  result.warnings.push_back("model N=" + format_double(n_params) +
                            " never reaches the envelope; excluded");
}

// Lowest loss among one model's runs at compute C.
std::optional<std::pair<double, const RunCurve*>> best_run_at(
    const std::vector<const RunCurve*>& model_curves, double C) {
  std::optional<std::pair<double, const RunCurve*>> best;
  for (const RunCurve* c : model_curves) {
    auto l = loss_at_compute(*c, C);
    if (l && (!best || *l < best->first)) best = std::make_pair(*l, c);
  }
  return best;
}

}  // namespace

FrontierExtraction extract_frontier_points(std::span<const EnvelopeSample> envelope,
                                           std::span<const RunCurve> curves) {
  const ModelIndex idx = index_models(curves);
  FrontierExtraction result;
  for (const auto& w : winning_intervals(envelope, idx)) {
    if (w.len == 0) {
      note_excluded(w.n_params, result);
      continue;
    }
    note_fragments(w, result);
    FrontierPoint fp;
    fp.C = std::sqrt(envelope[w.start].C * envelope[w.start + w.len - 1].C);
    fp.N = w.n_params;
    fp.D = fp.C / (6.0 * w.n_params);
    auto best = best_run_at(idx.by_model.at(w.n_params), fp.C);
    if (!best) {
      result.excluded_models.push_back(w.n_params);
      result.warnings.push_back("model N=" + format_double(w.n_params) +
                                " has no curve at its frontier compute; excluded");
      continue;
    }
    fp.loss = best->first;
    fp.B = best->second->batch_size_tokens;
    fp.run_id = best->second->run_id;
    fp.S = fp.D / fp.B;
    fp.truncated = w.start == 0 || w.start + w.len == envelope.size();
    result.points.push_back(fp);
  }
  return result;
}

FrontierExtraction extract_crossing_points(std::span<const EnvelopeSample> envelope,
                                           std::span<const RunCurve> curves) {
  const ModelIndex idx = index_models(curves);
  FrontierExtraction result;
  std::vector<WinningInterval> winners;
  for (const auto& w : winning_intervals(envelope, idx)) {
    if (w.len == 0) {
      note_excluded(w.n_params, result);
      continue;
    }
    note_fragments(w, result);
    winners.push_back(w);
  }
  for (std::size_t i = 0; i + 1 < winners.size(); ++i) {
    const auto& lo = winners[i];
    const auto& hi = winners[i + 1];
    const std::size_t end_lo = lo.start + lo.len - 1;
    if (hi.start <= end_lo) {
      result.warnings.push_back("models N=" + format_double(lo.n_params) + " and N=" +
                                format_double(hi.n_params) +
                                " win out of size order; no crossing taken");
      continue;
    }
    FrontierPoint fp;
    // Hand-over lies between the last sample of one and the first of the next.
    fp.C = std::sqrt(envelope[end_lo].C * envelope[hi.start].C);
    fp.N = std::sqrt(lo.n_params * hi.n_params);
    fp.D = fp.C / (6.0 * fp.N);
    auto a = best_run_at(idx.by_model.at(lo.n_params), fp.C);
    auto b = best_run_at(idx.by_model.at(hi.n_params), fp.C);
    if (!a || !b) {
      result.warnings.push_back("crossing of N=" + format_double(lo.n_params) + " and N=" +
                                format_double(hi.n_params) +
                                " lies outside one model's curves; skipped");
      continue;
    }
    fp.loss = std::min(a->first, b->first);
    fp.B = std::sqrt(a->second->batch_size_tokens * b->second->batch_size_tokens);
    fp.S = fp.D / fp.B;
    fp.run_id = a->second->run_id + "|" + b->second->run_id;
    result.points.push_back(fp);
  }
  return result;
}

FrontierExtraction extract_frontier(std::span<const EnvelopeSample> envelope,
                                    std::span<const RunCurve> curves, FrontierRule rule) {
  return rule == FrontierRule::crossing ? extract_crossing_points(envelope, curves)
                                        : extract_frontier_points(envelope, curves);
}

std::string_view to_string(FrontierRule rule) {
  return rule == FrontierRule::crossing ? "crossing" : "midpoint";
}

FrontierRule frontier_rule_from_string(std::string_view s) {
  if (s == "crossing") return FrontierRule::crossing;
  if (s == "midpoint") return FrontierRule::midpoint;
  throw ValidationError("unknown frontier rule '" + std::string(s) +
                        "' (expected crossing or midpoint)");
}

FrontierReport frontier_laws(std::span<const FrontierPoint> points,
                             std::optional<double> min_batch) {
  if (points.size() < 3)
    throw InsufficientDataError("frontier laws need >= 3 frontier points, got " +
                                std::to_string(points.size()));
  std::size_t interior = 0;
  for (const auto& p : points) interior += !p.truncated;
  const bool skip_truncated = interior >= 3;
  std::vector<double> c, loss, n, d, s, b;
  for (const auto& p : points) {
    if (skip_truncated && p.truncated) continue;
    c.push_back(p.C);
    loss.push_back(p.loss);
    n.push_back(p.N);
    d.push_back(p.D);
    s.push_back(p.S);
    b.push_back(p.B);
  }
  FrontierReport report;
  report.points.assign(points.begin(), points.end());
  report.points_fitted = c.size();
  report.L_opt = fit_power_law(c, loss);
  report.N_opt = fit_power_law(c, n);
  report.S_opt = fit_power_law(c, s);

  report.D_opt = report.N_opt;
  report.D_opt.p = 1.0 - report.N_opt.p;
  report.D_opt.k = 1.0 / (6.0 * report.N_opt.k);

  report.B_opt = report.S_opt;
  report.B_opt.p = report.D_opt.p - report.S_opt.p;
  report.B_opt.k = report.D_opt.k / report.S_opt.k;
  const double floor_batch = min_batch ? *min_batch : *std::min_element(b.begin(), b.end());
  if (report.B_opt.p > 0.0 && floor_batch > 0.0) {
    const double c_floor = std::pow(floor_batch / report.B_opt.k, 1.0 / report.B_opt.p);
    report.B_opt.x_min = std::max(report.B_opt.x_min, c_floor);
  }

  auto& r = report.residuals;
  for (const auto& p : points) {
    r.max_nd_violation = std::max(r.max_nd_violation, std::abs(6.0 * p.N * p.D / p.C - 1.0));
    r.max_sb_violation = std::max(r.max_sb_violation, std::abs(p.S * p.B / p.D - 1.0));
  }
  r.D_opt_free = fit_power_law(c, d);
  r.B_opt_free = fit_power_law(c, b);
  return report;
}

}  // namespace scalelaw
