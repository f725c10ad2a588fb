#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scalelaw {

// Training recipe for one reference model size.
struct Preset {
  std::string label;
  double n_params = 0.0;
  double batch_size_tokens = 0.0;  // global batch size
  double max_lr = 0.0;
  std::int64_t warmup_steps = 0;
  std::int64_t decay_steps = 0;

  bool operator==(const Preset&) const = default;
};

// GPT-3 style recipes for 125M ... 2.6B models.
std::vector<Preset> default_presets();

// Nearest preset in log N; ties go to the larger model.
const Preset& preset_lookup(std::span<const Preset> presets, double n_params);

}  // namespace scalelaw
