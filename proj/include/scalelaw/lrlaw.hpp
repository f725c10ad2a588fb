#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalelaw/error.hpp"
#include "scalelaw/runlog.hpp"

namespace scalelaw {

// Losses over a (batch size x LR scale factor) grid read at one token count.
// Missing cells are NaN. Interpolation is bilinear in (log B, log LR).
class LossSurface {
 public:
  LossSurface(double d_checkpoint, std::vector<double> grid_B, std::vector<double> grid_LR,
              std::vector<double> losses, double base_lr = 1.0);

  double d_checkpoint() const { return d_checkpoint_; }
  double base_lr() const { return base_lr_; }
  const std::vector<double>& grid_B() const { return grid_B_; }
  const std::vector<double>& grid_LR() const { return grid_LR_; }
  double at(std::size_t i_b, std::size_t j_lr) const { return losses_[i_b * grid_LR_.size() + j_lr]; }
  bool missing(std::size_t i_b, std::size_t j_lr) const;

  // nullopt outside the grid or when a surrounding cell is missing.
  std::optional<double> operator()(double B, double lr_scale) const;

 private:
  double d_checkpoint_;
  std::vector<double> grid_B_;
  std::vector<double> grid_LR_;
  std::vector<double> losses_;
  double base_lr_;
};

struct SurfaceOptions {
  std::optional<double> base_lr;  // default: smallest lr_peak in the sweep
  bool smooth = true;
};

// One model size. A cell is missing when its run diverged, its loss at the
// checkpoint exceeds twice its first loss, or the curve stops short.
LossSurface build_surface(const RunSet& runs, double d_checkpoint, const SurfaceOptions& options = {});

struct LrOptSample {
  double B = 0.0;
  double lr_scale = 0.0;
  double lr = 0.0;  // lr_scale * base_lr
  double loss = 0.0;
  bool boundary = false;  // argmin on the edge of the filled LR range
};

// LR_opt on a log grid in B with `refinement` samples per grid cell.
std::vector<LrOptSample> extract_lr_opt(const LossSurface& surface, int refinement = 8);

struct GammaFit {
  std::optional<double> gamma;
  double gamma_stderr = 0.0;
  std::optional<double> lr_ceiling;
  std::optional<double> plateau_onset_B;
  std::size_t samples_used = 0;
};

// Thrown when every sample sits on the plateau; the ceiling is still known.
class GammaUndefinedError : public NumericalError {
 public:
  GammaUndefinedError(const std::string& what, double ceiling, double onset)
      : NumericalError(what), ceiling_(ceiling), onset_(onset) {}
  double ceiling() const { return ceiling_; }
  double onset() const { return onset_; }

 private:
  double ceiling_;
  double onset_;
};

struct GammaOptions {
  double plateau_tolerance = 0.05;
  std::size_t plateau_min_samples = 3;
  double plateau_min_span = 2.0;  // ratio of largest to smallest B on the plateau
};

// Plateau is the longest suffix of non-boundary samples whose LR varies by
// less than the tolerance; gamma is the log-log slope over the rest.
GammaFit fit_gamma(std::span<const LrOptSample> samples, const GammaOptions& options = {});

enum class LrScaleRule { linear, sqrt, none };

LrScaleRule lr_scale_rule_from_string(const std::string& s);
std::string to_string(LrScaleRule rule);

double scale_lr(double base_lr, double base_B, double new_B, LrScaleRule rule);

std::string surface_csv(const LossSurface& surface);
std::string lr_opt_csv(std::span<const LrOptSample> samples);

}  // namespace scalelaw
