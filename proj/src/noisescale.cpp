#include "scalelaw/noisescale.hpp"

#include <cmath>
#include <cstdio>

#include "scalelaw/error.hpp"
#include "scalelaw/format.hpp"

namespace scalelaw {

void NoiseParams::validate() const {
  if (!(eta_max > 0.0 && B_noise > 0.0 && dL_max > 0.0 && gamma_tradeoff > 0.0))
    throw ValidationError("noise params: all fields must be > 0");
}

double eta_opt_sgd(double batch, const NoiseParams& params) {
  return params.eta_max / (1.0 + params.B_noise / batch);
}

double delta_loss_opt(double batch, const NoiseParams& params) {
  return params.dL_max / (1.0 + params.B_noise / batch);
}

double eta_opt_adam(double batch, const NoiseParams& params) {
  const double r = batch / params.B_noise;
  return params.eta_max / (0.5 * (std::sqrt(1.0 / r) + std::sqrt(r)));
}

TradeoffRow solve_tradeoff(double b_ratio, double gamma) {
  if (!(b_ratio > 0.0) || !(gamma > 0.0))
    throw ValidationError("tradeoff: batch ratio and gamma must be > 0");
  // e^2 - (1 + b) e + b (1 - gamma) = 0
  const double lin = 1.0 + b_ratio;
  const double disc = lin * lin - 4.0 * b_ratio * (1.0 - gamma);
  if (!(disc >= 0.0)) throw NumericalError("tradeoff: no real root");
  const double e = 0.5 * (lin + std::sqrt(disc));
  if (!(e > 1.0)) throw NumericalError("tradeoff: no root above 1");
  return {e, e / b_ratio, b_ratio};
}

std::vector<TradeoffRow> tradeoff_table(double gamma, std::span<const double> b_ratios) {
  std::vector<TradeoffRow> rows;
  rows.reserve(b_ratios.size());
  for (double b : b_ratios) rows.push_back(solve_tradeoff(b, gamma));
  return rows;
}

std::vector<double> default_tradeoff_ratios() { return {0.1, 0.5, 1, 2, 5, 10, 100}; }

namespace {

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%9.4g", v);
  return buf;
}

}  // namespace

std::string tradeoff_text(std::span<const TradeoffRow> rows) {
  std::string e = "E/E_min  ", s = "S/S_min  ", b = "B/B_crit ";
  for (const auto& r : rows) {
    e += cell(r.e_ratio);
    s += cell(r.s_ratio);
    b += cell(r.b_ratio);
  }
  return e + "\n" + s + "\n" + b + "\n";
}

std::string tradeoff_csv(std::span<const TradeoffRow> rows) {
  std::string out = "b_ratio,e_ratio,s_ratio\n";
  for (const auto& r : rows)
    out += format_double(r.b_ratio) + "," + format_double(r.e_ratio) + "," +
           format_double(r.s_ratio) + "\n";
  return out;
}

}  // namespace scalelaw
