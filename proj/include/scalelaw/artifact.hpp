#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scalelaw/bslaw.hpp"
#include "scalelaw/frontier.hpp"
#include "scalelaw/lawfit.hpp"
#include "scalelaw/presets.hpp"

namespace scalelaw {

struct FitSummary {
  std::optional<double> r_squared;
  double delta = 1e-3;
  std::optional<Constraint> constraint;
  std::optional<std::size_t> n_points;
  std::optional<double> objective_value;
};

// Compute-budget laws; D_opt and B_opt satisfy the frontier identities.
struct FrontierLaws {
  PowerLaw L_opt;
  PowerLaw N_opt;
  PowerLaw D_opt;
  PowerLaw S_opt;
  PowerLaw B_opt;
};

FrontierLaws frontier_laws_of(const FrontierReport& report);

// Optimal LR against batch size: LR_opt ~ B^gamma up to a ceiling, anchored
// at base_lr for base_B.
struct LrLaw {
  std::optional<double> gamma;
  double gamma_lo = 0.75;  // admissible band when gamma itself is unknown
  double gamma_hi = 1.0;
  std::optional<double> lr_ceiling;
  std::optional<double> plateau_onset_B;
  double base_lr = 0.0;
  double base_B = 0.0;
};

// A published comparison row: compute-optimal exponents (N_opt ~ C^a,
// D_opt ~ C^b) and, where given, the fitted law in either form.
struct ReferenceRow {
  double a = 0.0;
  double b = 0.0;
  std::optional<ChinchillaLaw> chinchilla;
  std::optional<KaplanLaw> kaplan;
};

// The interchange document between fitting and advice.
struct LawArtifact {
  std::string form = "chinchilla";  // or "kaplan"
  ChinchillaLaw law;                // used when form == chinchilla
  std::optional<KaplanLaw> kaplan;  // used when form == kaplan
  FitSummary fit;
  std::optional<FrontierLaws> frontier;
  std::optional<BoptLaw> bopt_law;
  std::optional<LrLaw> lr_law;
  std::vector<Preset> presets;
  std::map<std::string, ReferenceRow> references;
  std::map<std::string, std::string> notes;       // per-block descriptions
  std::map<std::string, std::string> provenance;  // inputs, seeds, options

  void validate() const;
};

// Pretty-printed, key order fixed, doubles in shortest round-trip form, so
// equal artifacts serialize to equal bytes. Infinite bounds are written as null.
std::string artifact_to_json(const LawArtifact& artifact);
LawArtifact artifact_from_json(const std::string& text);
LawArtifact load_artifact(const std::string& path);

// Every published constant: fitted law, frontier, data-budget laws, LR law,
// presets and the published comparison rows.
LawArtifact paper_artifact();

}  // namespace scalelaw
