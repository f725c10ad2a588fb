#pragma once

#include <span>
#include <string>
#include <vector>

namespace scalelaw {

// Parameters of the gradient-noise training model. Batch sizes are in tokens.
// SGD-style and Adam-style parameter sets are independent; never convert one
// into the other.
struct NoiseParams {
  double eta_max = 0.0;         // largest stable learning rate
  double B_noise = 0.0;         // gradient noise scale
  double dL_max = 0.0;          // per-step loss improvement at full batch
  double gamma_tradeoff = 1.0;  // curvature of the steps/examples hyperbola

  void validate() const;
};

double eta_opt_sgd(double batch, const NoiseParams& params);
double delta_loss_opt(double batch, const NoiseParams& params);
// Sign-of-gradient update: peaks at batch == B_noise.
double eta_opt_adam(double batch, const NoiseParams& params);

// One (E/E_min, S/S_min, B/B_crit) combination reaching the same loss.
struct TradeoffRow {
  double e_ratio = 0.0;
  double s_ratio = 0.0;
  double b_ratio = 0.0;
};

// Solves (e/b - 1)(e - 1) = gamma for the larger root at fixed batch ratio b.
TradeoffRow solve_tradeoff(double b_ratio, double gamma);
std::vector<TradeoffRow> tradeoff_table(double gamma, std::span<const double> b_ratios);
std::vector<double> default_tradeoff_ratios();

std::string tradeoff_text(std::span<const TradeoffRow> rows);
std::string tradeoff_csv(std::span<const TradeoffRow> rows);

inline double critical_batch(double e_min, double s_min) { return e_min / s_min; }

}  // namespace scalelaw
