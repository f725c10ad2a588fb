#include "scalelaw/presets.hpp"

#include <cmath>

#include "scalelaw/error.hpp"

namespace scalelaw {

std::vector<Preset> default_presets() {
  return {
      {"125M", 1.25e8, 5e5, 6.0e-4, 715, 500000},
      {"350M", 3.5e8, 5e5, 3.0e-4, 715, 500000},
      {"760M", 7.6e8, 5e5, 2.5e-4, 715, 500000},
      {"1.3B", 1.3e9, 1e6, 2.0e-4, 350, 300000},
      {"2.6B", 2.6e9, 1e6, 1.6e-4, 350, 300000},
  };
}

const Preset& preset_lookup(std::span<const Preset> presets, double n_params) {
  if (presets.empty()) throw ValidationError("preset table is empty");
  if (!(n_params > 0.0)) throw ValidationError("n_params must be positive");
  const Preset* best = nullptr;
  double best_dist = 0.0;
  for (const auto& p : presets) {
    const double dist = std::abs(std::log(n_params) - std::log(p.n_params));
    // Distances within 1e-12 count as a tie.
    const bool tie = best && std::abs(dist - best_dist) <= 1e-12;
    if (!best || (!tie && dist < best_dist) || (tie && p.n_params > best->n_params)) {
      best = &p;
      best_dist = dist;
    }
  }
  return *best;
}

}  // namespace scalelaw
