#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scalelaw/lawfit.hpp"
#include "scalelaw/noisescale.hpp"
#include "scalelaw/runlog.hpp"

namespace scalelaw {

enum class BcritMode { constant, loss_linked, data_linked };
enum class Optimizer { sgd, adam };

// How the critical batch size depends on the target loss.
//   constant:    B_crit = B_crit0
//   loss_linked: B_crit = B_crit0 * L0 / L
//   data_linked: B_crit = k (g* D_min)^p / b*, which puts the minimum of each
//                iso-loss contour exactly on B_opt = k D^p
struct BcritModel {
  BcritMode mode = BcritMode::constant;
  double B_crit0 = 0.0;
  double L0 = 0.0;
  double k = 0.0;
  double p = 0.0;
};

// Planted truth for the generator. The learning-rate model is expressed in
// scale-factor units: a run's factor is lr_peak / base_lr of its model.
struct GroundTruth {
  ChinchillaLaw law;
  NoiseParams noise_sgd;
  NoiseParams noise_adam;
  Optimizer optimizer = Optimizer::adam;
  BcritModel bcrit;
  double small_batch_penalty = 0.0;  // c in D = D_min (e(b) + c / b)
  bool lr_efficiency = true;
  double observation_noise = 0.0;  // sigma of multiplicative log-normal noise
  std::uint64_t seed = 0;

  void validate() const;
  const NoiseParams& noise() const { return optimizer == Optimizer::adam ? noise_adam : noise_sgd; }
};

struct SynthModel {
  std::string label;
  double n_params = 0.0;
  double base_lr = 0.0;
  std::int64_t warmup_steps = 0;
  std::int64_t decay_steps = 0;
};

struct SynthConfig {
  std::vector<SynthModel> models;
  std::vector<double> batch_sizes;
  std::vector<LrScheme> lr_schemes;
  std::vector<double> lr_factors;      // multiply the scheme's LR
  double lr_base_batch_tokens = 5e5;   // batch at which every scheme uses base_lr
  double total_tokens = 0.0;
  double checkpoint_tokens = 0.0;      // converted per run to >= 1 step
  std::string output;

  void validate() const;
};

// Ground truth and sweep shaped like the published experiments: five GPT-3
// sizes, 0.5M..32M batches, three LR schemes, 300B tokens, 0.5% noise.
GroundTruth paper_ground_truth();
SynthConfig paper_shaped_config();

// Batch-size x LR-factor sweep of one model for surface work.
SynthConfig lr_sweep_config();

// Minimum of e(b) + c / b over b (b* and g*); requires c > 0.
std::pair<double, double> contour_minimum(double gamma, double c);

double critical_batch_for(const GroundTruth& gt, double n_params, double loss);

// Tokens to reach target_loss at batch B with a perfectly tuned LR.
double d_required(const GroundTruth& gt, double n_params, double target_loss, double B);

// Loss after `tokens` effective tokens at batch B (inverse of d_required).
double loss_at_effective_tokens(const GroundTruth& gt, double n_params, double B, double tokens);

// Quadratic LR efficiency 2 rho - rho^2 with rho = lr_factor / eta_opt(B).
double lr_efficiency(const GroundTruth& gt, double B, double lr_factor);

struct CurveSpec {
  std::string run_id;
  SynthModel model;
  double batch_size_tokens = 0.0;
  double lr_factor = 1.0;  // relative to model.base_lr, scheme scaling included
  LrScheme scheme = LrScheme::origin;
  double total_tokens = 0.0;
  std::int64_t cadence_steps = 1;
};

RunRecord simulate_curve(const GroundTruth& gt, const CurveSpec& spec);

// One run per (model, B, scheme, factor); deterministic in (config, gt).
RunSet simulate_grid(const SynthConfig& config, const GroundTruth& gt, unsigned threads = 0);

// Standard normal draw keyed by (seed, run_id, step).
double keyed_normal(std::uint64_t seed, const std::string& run_id, std::int64_t step);

std::string run_id_for(const SynthModel& model, double B, LrScheme scheme, double lr_factor);

// JSON documents with every field explicit; readers reject missing or
// unknown fields.
std::string ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);

// Replaces gt.seed with SCALELAW_SEED when that variable is set.
void apply_seed_override(GroundTruth& gt);

}  // namespace scalelaw
