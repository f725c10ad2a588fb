#include "scalelaw/runlog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "scalelaw/error.hpp"
#include "scalelaw/format.hpp"

namespace scalelaw {

using nlohmann::json;

std::string_view to_string(LrScheme scheme) {
  switch (scheme) {
    case LrScheme::origin: return "origin";
    case LrScheme::sqrt_scaled: return "sqrt";
    case LrScheme::linear_scaled: return "linear";
  }
  return "origin";
}

LrScheme lr_scheme_from_string(std::string_view name) {
  if (name == "origin") return LrScheme::origin;
  if (name == "sqrt") return LrScheme::sqrt_scaled;
  if (name == "linear") return LrScheme::linear_scaled;
  throw ValidationError("unknown lr_scheme '" + std::string(name) + "'");
}

void validate(const RunRecord& run) {
  const std::string id = "run '" + run.run_id + "': ";
  if (run.run_id.empty()) throw ValidationError("run_id must be non-empty");
  if (!(run.model.n_params > 0.0)) throw ValidationError(id + "n_params must be > 0");
  if (!(run.batch_size_tokens > 0.0))
    throw ValidationError(id + "batch_size_tokens must be > 0");
  if (!(run.lr_peak > 0.0)) throw ValidationError(id + "lr_peak must be > 0");
  if (!(run.lr_scale > 0.0)) throw ValidationError(id + "lr_scale must be > 0");
  for (std::size_t i = 0; i < run.points.size(); ++i) {
    const auto& p = run.points[i];
    const std::string at = id + "point " + std::to_string(i) + ": ";
    if (p.step < 1) throw ValidationError(at + "step must be >= 1");
    const bool last = i + 1 == run.points.size();
    if (!std::isfinite(p.loss)) {
      if (!(run.diverged && last))
        throw ValidationError(at + "non-finite loss outside a diverged run's tail");
    } else if (!(p.loss > 0.0)) {
      throw ValidationError(at + "loss must be > 0");
    }
    const double expected = static_cast<double>(p.step) * run.batch_size_tokens;
    if (std::abs(p.tokens - expected) > run.batch_size_tokens * (1.0 + 1e-9))
      throw ValidationError(at + "tokens disagree with step x batch_size_tokens");
    if (i > 0) {
      const auto& q = run.points[i - 1];
      if (p.step <= q.step || p.tokens <= q.tokens)
        throw ValidationError(at + "curve is not strictly increasing in step and tokens");
    }
  }
}

void RunSet::add(RunRecord run) {
  if (runs_.count(run.run_id) > 0)
    throw ConflictError("duplicate run_id '" + run.run_id + "'");
  auto id = run.run_id;
  runs_.emplace(std::move(id), std::move(run));
}

const RunRecord& RunSet::at(const std::string& run_id) const {
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw ValidationError("unknown run_id '" + run_id + "'");
  return it->second;
}

std::vector<const RunRecord*> RunSet::records() const {
  std::vector<const RunRecord*> out;
  out.reserve(runs_.size());
  for (const auto& [id, run] : runs_) out.push_back(&run);
  return out;
}

std::vector<double> RunSet::model_sizes() const {
  std::vector<double> sizes;
  for (const auto& [id, run] : runs_) sizes.push_back(run.model.n_params);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

namespace {

double number_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, key, "missing");
  if (!it->is_number()) throw ParseError(line, key, "expected a number");
  return it->get<double>();
}

std::int64_t integer_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, key, "missing");
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) {
    double v = it->get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  }
  throw ParseError(line, key, "expected an integer");
}

std::optional<int> optional_int(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw ParseError(line, key, "expected an integer");
  return it->get<int>();
}

RunRecord parse_record(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, "<record>", std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "<record>", "expected a JSON object");

  RunRecord run;
  auto id = obj.find("run_id");
  if (id == obj.end()) throw ParseError(line, "run_id", "missing");
  if (!id->is_string()) throw ParseError(line, "run_id", "expected a string");
  run.run_id = id->get<std::string>();
  run.model.n_params = number_field(obj, "n_params", line);
  run.model.layers = optional_int(obj, "layers", line);
  run.model.hidden = optional_int(obj, "hidden", line);
  run.model.heads = optional_int(obj, "heads", line);
  if (auto it = obj.find("label"); it != obj.end()) {
    if (!it->is_string()) throw ParseError(line, "label", "expected a string");
    run.model.label = it->get<std::string>();
  }
  run.batch_size_tokens = number_field(obj, "batch_size_tokens", line);
  run.lr_peak = number_field(obj, "lr_peak", line);
  auto scheme = obj.find("lr_scheme");
  if (scheme == obj.end()) throw ParseError(line, "lr_scheme", "missing");
  if (!scheme->is_string()) throw ParseError(line, "lr_scheme", "expected a string");
  try {
    run.lr_scheme = lr_scheme_from_string(scheme->get<std::string>());
  } catch (const ValidationError& e) {
    throw ParseError(line, "lr_scheme", e.what());
  }
  if (obj.contains("lr_scale")) run.lr_scale = number_field(obj, "lr_scale", line);
  run.warmup_steps = integer_field(obj, "warmup_steps", line);
  run.decay_steps = integer_field(obj, "decay_steps", line);
  if (auto it = obj.find("diverged"); it != obj.end()) {
    if (!it->is_boolean()) throw ParseError(line, "diverged", "expected a boolean");
    run.diverged = it->get<bool>();
  }

  auto pts = obj.find("points");
  if (pts == obj.end()) throw ParseError(line, "points", "missing");
  if (!pts->is_array()) throw ParseError(line, "points", "expected an array");
  run.points.reserve(pts->size());
  for (std::size_t i = 0; i < pts->size(); ++i) {
    const auto& p = (*pts)[i];
    const std::string field = "points[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != 3)
      throw ParseError(line, field, "expected [step, tokens, loss]");
    if (!p[0].is_number() || !p[1].is_number())
      throw ParseError(line, field, "step and tokens must be numbers");
    CurvePoint cp;
    double step = p[0].get<double>();
    if (std::floor(step) != step) throw ParseError(line, field, "step must be an integer");
    cp.step = static_cast<std::int64_t>(step);
    cp.tokens = p[1].get<double>();
    if (p[2].is_null()) {
      cp.loss = std::numeric_limits<double>::infinity();
    } else if (p[2].is_number()) {
      cp.loss = p[2].get<double>();
    } else {
      throw ParseError(line, field, "loss must be a number or null");
    }
    run.points.push_back(cp);
  }

  try {
    validate(run);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
  return run;
}

}  // namespace

ParseResult parse_runs(std::span<const std::string> lines, bool strict) {
  ParseResult result;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    const auto& text = lines[i];
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      auto run = parse_record(text, line);
      if (result.runs.contains(run.run_id))
        throw ConflictError("line " + std::to_string(line) + ": duplicate run_id '" +
                            run.run_id + "'");
      result.runs.add(std::move(run));
    } catch (const ValidationError& e) {
      if (strict) throw;
      result.rejected.push_back({line, e.what()});
    }
  }
  return result;
}

ParseResult parse_runs_text(std::string_view text, bool strict) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return parse_runs(lines, strict);
}

RunSet load_runs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open run log '" + path + "': file not found");
  std::stringstream buf;
  buf << in.rdbuf();
  auto result = parse_runs_text(buf.str(), true);
  result.runs.source = path;
  return std::move(result.runs);
}

namespace {

// nlohmann's serializer emits shortest round-trip doubles; non-finite losses
// become null.
json record_json(const RunRecord& run) {
  json obj = json::object();
  obj["run_id"] = run.run_id;
  obj["n_params"] = run.model.n_params;
  if (run.model.layers) obj["layers"] = *run.model.layers;
  if (run.model.hidden) obj["hidden"] = *run.model.hidden;
  if (run.model.heads) obj["heads"] = *run.model.heads;
  if (!run.model.label.empty()) obj["label"] = run.model.label;
  obj["batch_size_tokens"] = run.batch_size_tokens;
  obj["lr_peak"] = run.lr_peak;
  obj["lr_scheme"] = std::string(to_string(run.lr_scheme));
  obj["lr_scale"] = run.lr_scale;
  obj["warmup_steps"] = run.warmup_steps;
  obj["decay_steps"] = run.decay_steps;
  if (run.diverged) obj["diverged"] = true;
  json pts = json::array();
  for (const auto& p : run.points) {
    json loss = std::isfinite(p.loss) ? json(p.loss) : json(nullptr);
    pts.push_back(json::array({p.step, p.tokens, loss}));
  }
  obj["points"] = std::move(pts);
  return obj;
}

}  // namespace

std::string serialize_run(const RunRecord& run) { return record_json(run).dump(); }

std::string serialize_runs(const RunSet& runs) {
  std::string out;
  for (const auto& [id, run] : runs) {
    out += serialize_run(run);
    out += '\n';
  }
  return out;
}

SmoothingOptions default_smoothing(const RunRecord& run) {
  SmoothingOptions opts;
  const double total = run.total_tokens();
  opts.half_life_tokens = 0.01 * total;
  double warmup = total > 0.0
                      ? static_cast<double>(run.warmup_steps) * run.batch_size_tokens / total
                      : 0.0;
  opts.discard_fraction = std::min(std::max(0.01, warmup), 0.5);
  return opts;
}

namespace {

std::vector<CurvePoint> discard_transient(std::span<const CurvePoint> points,
                                          double discard_fraction) {
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0))
    throw ValidationError("discard_fraction must lie in [0, 1)");
  const double cutoff = discard_fraction * points.back().tokens;
  std::vector<CurvePoint> out;
  for (const auto& p : points)
    if (p.tokens >= cutoff) out.push_back(p);
  if (out.size() < 2)
    throw InsufficientDataError("fewer than 2 points survive the transient discard");
  return out;
}

}  // namespace

std::vector<CurvePoint> smooth_curve(std::span<const CurvePoint> points,
                                     double half_life_tokens, double discard_fraction) {
  if (points.size() < 2)
    throw InsufficientDataError("smoothing needs at least 2 points, got " +
                                std::to_string(points.size()));
  if (!(half_life_tokens > 0.0)) throw ValidationError("half_life_tokens must be > 0");
  auto out = discard_transient(points, discard_fraction);

  double avg = out.front().loss;
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double w = std::exp2(-(out[i].tokens - out[i - 1].tokens) / half_life_tokens);
    avg = w * avg + (1.0 - w) * out[i].loss;
    out[i].loss = avg;
  }
  return out;
}

std::vector<CurvePoint> smooth_curve_local(std::span<const CurvePoint> points,
                                           double bandwidth_log, double discard_fraction) {
  if (points.size() < 2)
    throw InsufficientDataError("smoothing needs at least 2 points, got " +
                                std::to_string(points.size()));
  if (!(bandwidth_log > 0.0)) throw ValidationError("bandwidth_log must be > 0");
  auto out = discard_transient(points, discard_fraction);
  const std::size_t n = out.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(out[i].loss > 0.0))
      throw ValidationError("log-local smoothing needs positive losses");
    x[i] = std::log(out[i].tokens);
    y[i] = std::log(out[i].loss);
  }
  const double reach = 3.0 * bandwidth_log;
  const double inv2h2 = 0.5 / (bandwidth_log * bandwidth_log);
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (x[i] - x[lo] > reach) ++lo;
    while (hi < n && x[hi] - x[i] <= reach) ++hi;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double dx = x[j] - x[i];
      const double w = std::exp(-dx * dx * inv2h2);
      sw += w;
      sx += w * dx;
      sy += w * y[j];
      sxx += w * dx * dx;
      sxy += w * dx * y[j];
    }
    // Intercept of the weighted line centred at x[i].
    const double det = sw * sxx - sx * sx;
    const double fit = det > 1e-12 * sw * sxx ? (sxx * sy - sx * sxy) / det : sy / sw;
    out[i].loss = std::exp(fit);
  }
  return out;
}

std::vector<CurvePoint> smooth_run(const RunRecord& run, SmoothingMode mode) {
  const auto opts = default_smoothing(run);
  if (mode == SmoothingMode::log_local)
    return smooth_curve_local(run.points, opts.bandwidth_log, opts.discard_fraction);
  return smooth_curve(run.points, opts.half_life_tokens, opts.discard_fraction);
}

double tokens_at_loss(std::span<const CurvePoint> points, double target_loss) {
  if (points.empty()) throw InsufficientDataError("empty curve");
  if (target_loss > points.front().loss)
    throw RangeError("target loss " + format_double(target_loss) +
                         " lies above the curve's initial loss " +
                         format_double(points.front().loss),
                     points.front().loss);
  double running = points.front().loss;
  if (running == target_loss) return points.front().tokens;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double prev = running;
    running = std::min(running, points[i].loss);
    if (running <= target_loss) {
      if (running == target_loss) return points[i].tokens;
      const double x0 = std::log(points[i - 1].tokens);
      const double x1 = std::log(points[i].tokens);
      const double frac = (prev - target_loss) / (prev - running);
      return std::exp(x0 + frac * (x1 - x0));
    }
  }
  throw RangeError("target loss " + format_double(target_loss) +
                       " is unreachable; the curve bottoms out at " + format_double(running),
                   running);
}

std::optional<double> loss_at_tokens(std::span<const CurvePoint> points, double tokens) {
  if (points.empty() || tokens < points.front().tokens || tokens > points.back().tokens)
    return std::nullopt;
  auto it = std::lower_bound(points.begin(), points.end(), tokens,
                             [](const CurvePoint& p, double t) { return p.tokens < t; });
  if (it->tokens == tokens) return it->loss;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double frac =
      (std::log(tokens) - std::log(lo.tokens)) / (std::log(hi.tokens) - std::log(lo.tokens));
  return lo.loss + frac * (hi.loss - lo.loss);
}

std::string curve_csv(std::span<const CurvePoint> points) {
  std::string out = "step,tokens,loss\n";
  for (const auto& p : points) {
    out += std::to_string(p.step);
    out += ',';
    out += format_double(p.tokens);
    out += ',';
    out += format_double(p.loss);
    out += '\n';
  }
  return out;
}

std::vector<RunCurve> prepare_curves(const RunSet& runs, bool smooth, SmoothingMode mode) {
  std::vector<RunCurve> out;
  for (const auto& [id, run] : runs) {
    if (run.diverged || run.points.size() < 2) continue;
    RunCurve c{id, run.model.n_params, run.batch_size_tokens, run.lr_peak, run.lr_scheme,
               smooth ? smooth_run(run, mode) : run.points};
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace scalelaw
