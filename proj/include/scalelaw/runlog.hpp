#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scalelaw {

// Non-embedding parameter count plus optional architecture metadata. The
// count is trusted as given; nothing is recomputed from layers/hidden.
struct ModelSpec {
  double n_params = 0.0;
  std::optional<int> layers;
  std::optional<int> hidden;
  std::optional<int> heads;
  std::string label;
};

struct CurvePoint {
  std::int64_t step = 0;
  double tokens = 0.0;
  double loss = 0.0;  // per-token cross-entropy, nats

  bool operator==(const CurvePoint&) const = default;
};

enum class LrScheme { origin, sqrt_scaled, linear_scaled };

std::string_view to_string(LrScheme scheme);
LrScheme lr_scheme_from_string(std::string_view name);

struct RunRecord {
  std::string run_id;
  ModelSpec model;
  double batch_size_tokens = 0.0;
  double lr_peak = 0.0;
  LrScheme lr_scheme = LrScheme::origin;
  double lr_scale = 1.0;  // multiplier applied on top of the scheme
  std::int64_t warmup_steps = 0;
  std::int64_t decay_steps = 0;
  // Diverged runs may carry a non-finite loss on their last point.
  bool diverged = false;
  std::vector<CurvePoint> points;

  double total_tokens() const { return points.empty() ? 0.0 : points.back().tokens; }
};

// Throws ValidationError describing the first violated invariant.
void validate(const RunRecord& run);

class RunSet {
 public:
  // Throws ConflictError when run_id is already present.
  void add(RunRecord run);

  const RunRecord& at(const std::string& run_id) const;
  bool contains(const std::string& run_id) const { return runs_.count(run_id) > 0; }
  std::size_t size() const { return runs_.size(); }
  bool empty() const { return runs_.empty(); }

  // Iteration is in run_id order.
  auto begin() const { return runs_.begin(); }
  auto end() const { return runs_.end(); }

  std::vector<const RunRecord*> records() const;
  // Distinct n_params values, ascending.
  std::vector<double> model_sizes() const;

  std::string source;
  std::string ingested_at;

 private:
  std::map<std::string, RunRecord> runs_;
};

struct Rejection {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  RunSet runs;
  std::vector<Rejection> rejected;
};

// Parses run-log JSONL. Blank lines are skipped. In strict mode the first bad
// line throws (ParseError, ConflictError or ValidationError); otherwise bad
// lines are collected in `rejected`.
ParseResult parse_runs(std::span<const std::string> lines, bool strict = true);
ParseResult parse_runs_text(std::string_view text, bool strict = true);
RunSet load_runs(const std::string& path);

std::string serialize_run(const RunRecord& run);
std::string serialize_runs(const RunSet& runs);

// ema: causal exponential moving average over tokens.
// log_local: Gaussian-weighted local linear fit of log loss on log tokens.
// It has no lag and leaves exact power-law stretches untouched.
enum class SmoothingMode { ema, log_local };

struct SmoothingOptions {
  double half_life_tokens = 0.0;
  double discard_fraction = 0.0;
  double bandwidth_log = 0.1;  // kernel sd in natural-log tokens
  SmoothingMode mode = SmoothingMode::ema;
};

// Half-life of 1% of the run's tokens; discard max(1%, warm-up span).
SmoothingOptions default_smoothing(const RunRecord& run);

std::vector<CurvePoint> smooth_curve(std::span<const CurvePoint> points,
                                     double half_life_tokens,
                                     double discard_fraction);
// Kernel truncated at 3 bandwidths; edges get a one-sided fit.
std::vector<CurvePoint> smooth_curve_local(std::span<const CurvePoint> points,
                                           double bandwidth_log, double discard_fraction);
std::vector<CurvePoint> smooth_run(const RunRecord& run,
                                   SmoothingMode mode = SmoothingMode::ema);

// A run's curve prepared for frontier work (smoothed unless raw is requested).
struct RunCurve {
  std::string run_id;
  double n_params = 0.0;
  double batch_size_tokens = 0.0;
  double lr_peak = 0.0;
  LrScheme lr_scheme = LrScheme::origin;
  std::vector<CurvePoint> points;
};

// Diverged runs are skipped. Output is in run_id order.
std::vector<RunCurve> prepare_curves(const RunSet& runs, bool smooth = true,
                                     SmoothingMode mode = SmoothingMode::ema);

inline double flops(double n_params, double tokens) { return 6.0 * n_params * tokens; }

// Tokens at which the running-minimum envelope of the curve first reaches
// target_loss, interpolating linearly in (log tokens, loss).
double tokens_at_loss(std::span<const CurvePoint> points, double target_loss);

// Loss interpolated linearly in log tokens; nullopt outside the curve's span.
std::optional<double> loss_at_tokens(std::span<const CurvePoint> points, double tokens);

std::string curve_csv(std::span<const CurvePoint> points);

}  // namespace scalelaw
