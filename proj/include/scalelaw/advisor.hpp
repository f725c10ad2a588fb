#pragma once

#include <map>
#include <optional>
#include <string>

#include "scalelaw/artifact.hpp"
#include "scalelaw/lrlaw.hpp"

namespace scalelaw {

// A training configuration with the law behind every field and any
// validity warnings, keyed by field name (N, D, S, B, LR, loss).
struct Recommendation {
  std::string mode;  // "compute" or "data"
  std::optional<double> C;
  std::optional<double> N;
  double D = 0.0;
  double S = 0.0;
  double B = 0.0;
  std::optional<double> LR;
  std::optional<double> lr_anchor_lr;
  std::optional<double> lr_anchor_B;
  LrScaleRule lr_rule = LrScaleRule::linear;
  std::optional<double> predicted_loss;
  std::optional<double> law_loss;  // eval of the fitted L(N, D), as a cross-check
  std::string regime;              // data mode: "linear" or "power" branch of B_opt
  std::map<std::string, std::string> provenance;
  std::map<std::string, std::string> flags;
};

// Explicit LR baseline (known good LR at a batch size) replacing preset anchoring.
struct LrAnchor {
  double lr = 0.0;
  double batch_size_tokens = 0.0;
};

struct AdviceOptions {
  LrScaleRule lr_rule = LrScaleRule::linear;
  std::optional<LrAnchor> anchor;
};

// N from N_opt(C), D = C / 6N, S from S_opt(C), B = D / S; loss from L_opt(C).
// LR: preset of the nearest size, scaled to B and capped at the LR ceiling.
Recommendation advise_compute(const LawArtifact& laws, double C, const AdviceOptions& options = {});

// B from the two-regime B_opt(D), S = D / B. With N, the preset for N anchors
// the LR and the fitted law predicts the loss.
Recommendation advise_data(const LawArtifact& laws, double D, std::optional<double> N = std::nullopt,
                           const AdviceOptions& options = {});

struct CompressionResult {
  double target_loss = 0.0;
  double N_small = 0.0;
  double inference_ratio = 0.0;  // N0 / N_small
};

// Smallest model that matches the loss of (N0, D0) when trained on candidate_D.
CompressionResult compress_query(const ChinchillaLaw& law, double N0, double D0, double candidate_D);

std::string recommendation_json(const Recommendation& rec);
// Aligned table: N, D, FLOPs, B, LR, then steps, loss and flags.
std::string recommendation_text(const Recommendation& rec);

}  // namespace scalelaw
