#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalelaw/frontier.hpp"
#include "scalelaw/runlog.hpp"

namespace scalelaw {

struct ContourPoint {
  double loss_level = 0.0;
  double B = 0.0;
  double D_required = 0.0;
  std::string run_id;  // run that set D_required
};

enum class LrPolicy { best_of_schemes, fixed_scheme };

struct ContourOptions {
  LrPolicy policy = LrPolicy::best_of_schemes;
  LrScheme scheme = LrScheme::linear_scaled;  // used by fixed_scheme
};

struct Contour {
  double loss_level = 0.0;
  std::vector<ContourPoint> points;  // ascending B
  std::vector<double> gaps;          // batch sizes that never reach the level
};

// Tokens needed to reach loss_level at each batch size, one model size only.
// Throws InsufficientDataError when no batch size reaches the level.
Contour iso_loss_contour(std::span<const RunCurve> curves, double loss_level,
                         const ContourOptions& options = {});

struct ContourVertex {
  double loss_level = 0.0;
  double B_star = 0.0;
  double D_star = 0.0;
  double curvature = 0.0;  // second-order coefficient in log-log space
  bool extrapolated = false;
};

// Least-squares quadratic of log D on log B; returns its minimum.
// NumericalError when the quadratic has no interior minimum.
ContourVertex fit_contour_parabola(std::span<const ContourPoint> points);

struct BoptLaw {
  double k = 0.0;
  double p = 0.0;
  double s_floor = 4000.0;
  double crossover_D = 0.0;
  bool power_fitted = false;
  bool linear_fitted = false;
  double D_min = 0.0;  // range of the vertices used
  double D_max = 0.0;

  // min(D / s_floor, k D^p); linear everywhere when the power branch is missing.
  double operator()(double D) const;
};

struct BoptFitOptions {
  std::optional<double> s_floor_hint;
  // Vertices with D/B at or below the band's upper edge count as linear regime.
  double band_lo = 2500.0;
  double band_hi = 6000.0;
  double default_s_floor = 4000.0;
};

BoptLaw fit_bopt_law(std::span<const ContourVertex> vertices, const BoptFitOptions& options = {});

// S_opt(D) = D / B_opt(D) on the power branch.
PowerLaw derive_sopt(const BoptLaw& law);

// Evenly spaced levels between two percentiles of the curves' final losses.
std::vector<double> default_loss_levels(std::span<const RunCurve> curves, int count = 8,
                                        double lo_percentile = 0.2, double hi_percentile = 0.8);

struct BoptModelResult {
  double n_params = 0.0;
  std::vector<Contour> contours;
  std::vector<ContourVertex> vertices;
  std::optional<BoptLaw> law;
};

struct BoptReport {
  std::vector<double> loss_levels;
  std::vector<BoptModelResult> models;
  BoptLaw pooled;
  std::vector<std::string> warnings;
};

struct BoptPipelineOptions {
  ContourOptions contour;
  BoptFitOptions fit;
  std::vector<double> loss_levels;  // empty: default_loss_levels over all curves
  bool include_extrapolated = false;
  // Parabola sees only this many points centred on the contour's lowest
  // D_required (0: all points). Keeps far-off batches from tilting the vertex.
  std::size_t vertex_window = 5;
};

// Contours per model size, parabola vertices, per-size and pooled laws.
BoptReport bopt_pipeline(std::span<const RunCurve> curves, const BoptPipelineOptions& options = {});

// kind,loss_level,B,D_required,is_fitted_extrapolation
std::string contour_csv(std::span<const Contour> contours,
                        std::span<const ContourVertex> vertices);

}  // namespace scalelaw
