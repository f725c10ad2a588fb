#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scalelaw/artifact.hpp"
#include "scalelaw/bslaw.hpp"
#include "scalelaw/frontier.hpp"
#include "scalelaw/lawfit.hpp"
#include "scalelaw/runlog.hpp"

namespace scalelaw {

struct PipelineOptions {
  bool smooth = true;
  SmoothingMode smoothing = SmoothingMode::log_local;
  FrontierRule frontier_rule = FrontierRule::crossing;
  int envelope_per_decade = 64;     // compute grid density for the envelope
  int fit_points_per_decade = 16;   // token grid density for the law fit
  // Constraint for the law fit; by default taken from the fitted N_opt.
  std::optional<Constraint> constraint;
  FitOptions fit;
  bool fit_bopt = true;
  BoptPipelineOptions bopt;
};

struct PipelineResult {
  FrontierExtraction extraction;
  FrontierReport frontier;
  FitReport fit;
  std::optional<BoptReport> bopt;
  std::vector<std::string> warnings;
  LawArtifact artifact;
};

// Runs -> prepared curves -> envelope -> frontier laws -> constrained law fit
// on per-size envelope points -> batch-size law. The artifact carries the
// options in its provenance and no timestamps, so equal inputs give equal bytes.
PipelineResult fit_pipeline(const RunSet& runs, const PipelineOptions& options = {});

}  // namespace scalelaw
