#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalelaw/runlog.hpp"

namespace scalelaw {

// y = k x^p, fitted on [x_min, x_max]; evaluation outside is extrapolation.
struct PowerLaw {
  double k = 0.0;
  double p = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;

  double operator()(double x) const;
  bool extrapolates(double x) const { return x < x_min || x > x_max; }

  bool operator==(const PowerLaw&) const = default;
};

// Ordinary least squares of log y on log x.
PowerLaw fit_power_law(std::span<const double> xs, std::span<const double> ys);

// Log-spaced compute grid covering the union of the curves' FLOP ranges.
std::vector<double> compute_grid(std::span<const RunCurve> curves, int per_decade = 64);

struct EnvelopeSample {
  double C = 0.0;
  double loss = 0.0;
  std::string winner;
};

// Pointwise minimum over all curves of loss vs C = 6 N D. Grid values no curve
// covers are skipped; ties go to the earliest curve.
std::vector<EnvelopeSample> compute_envelope(std::span<const RunCurve> curves,
                                             std::span<const double> grid);

std::string envelope_csv(std::span<const EnvelopeSample> envelope);

struct FrontierPoint {
  double C = 0.0;
  double loss = 0.0;
  double N = 0.0;
  double D = 0.0;
  double S = 0.0;
  double B = 0.0;
  std::string run_id;
  // Winning interval touches either end of the envelope, so its centre is
  // set by data coverage rather than by a neighbouring model.
  bool truncated = false;
};

struct FrontierExtraction {
  std::vector<FrontierPoint> points;
  std::vector<double> excluded_models;  // sizes that never win the envelope
  std::vector<std::string> warnings;
};

// One point per model size at the geometric mean of its (longest) winning
// interval on the envelope.
FrontierExtraction extract_frontier_points(std::span<const EnvelopeSample> envelope,
                                           std::span<const RunCurve> curves);

// One point per hand-over between consecutive winning sizes: C where the
// envelope passes from one to the next, N the geometric mean of the pair,
// B the geometric mean of their best batches. Never truncated.
FrontierExtraction extract_crossing_points(std::span<const EnvelopeSample> envelope,
                                           std::span<const RunCurve> curves);

enum class FrontierRule { crossing, midpoint };
std::string_view to_string(FrontierRule rule);
FrontierRule frontier_rule_from_string(std::string_view s);

FrontierExtraction extract_frontier(std::span<const EnvelopeSample> envelope,
                                    std::span<const RunCurve> curves, FrontierRule rule);

struct ConsistencyResiduals {
  double max_nd_violation = 0.0;  // max |6 N D / C - 1| over points
  double max_sb_violation = 0.0;  // max |S B / D - 1| over points
  PowerLaw D_opt_free;            // independent fits, for comparison only
  PowerLaw B_opt_free;
};

struct FrontierReport {
  std::vector<FrontierPoint> points;
  std::size_t points_fitted = 0;
  PowerLaw L_opt;
  PowerLaw N_opt;
  PowerLaw D_opt;
  PowerLaw S_opt;
  PowerLaw B_opt;
  ConsistencyResiduals residuals;
};

// N_opt and S_opt are fitted; D_opt and B_opt are derived so that C = 6 N D
// and D = S B hold exactly. B_opt's validity starts where it reaches
// min_batch (defaults to the smallest batch among the points). Truncated
// points are left out of the regressions while at least three others remain.
FrontierReport frontier_laws(std::span<const FrontierPoint> points,
                             std::optional<double> min_batch = std::nullopt);

}  // namespace scalelaw
