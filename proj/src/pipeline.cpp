#include "scalelaw/pipeline.hpp"

#include "scalelaw/format.hpp"
#include "scalelaw/presets.hpp"

namespace scalelaw {

namespace {

std::string smoothing_name(const PipelineOptions& o) {
  if (!o.smooth) return "none";
  return o.smoothing == SmoothingMode::log_local ? "log_local" : "ema";
}

}  // namespace

PipelineResult fit_pipeline(const RunSet& runs, const PipelineOptions& options) {
  if (runs.empty()) throw InsufficientDataError("no runs to fit");
  PipelineResult out;
  const std::vector<RunCurve> curves = prepare_curves(runs, options.smooth, options.smoothing);
  if (curves.empty()) throw InsufficientDataError("every run diverged");

  const auto envelope = compute_envelope(curves, compute_grid(curves, options.envelope_per_decade));
  out.extraction = extract_frontier(envelope, curves, options.frontier_rule);
  out.warnings = out.extraction.warnings;
  out.frontier = frontier_laws(out.extraction.points);

  const Constraint constraint =
      options.constraint ? *options.constraint
                         : Constraint::from_frontier(out.frontier.N_opt.p, out.frontier.N_opt.k);
  const auto points = envelope_fit_points(curves, options.fit_points_per_decade);
  out.fit = constrained_fit(points, constraint, options.fit);

  if (options.fit_bopt) {
    out.bopt = bopt_pipeline(curves, options.bopt);
    out.warnings.insert(out.warnings.end(), out.bopt->warnings.begin(), out.bopt->warnings.end());
  }

  LawArtifact& a = out.artifact;
  a.form = "chinchilla";
  a.law = out.fit.law;
  a.fit.r_squared = out.fit.r_squared;
  a.fit.delta = out.fit.huber_delta;
  a.fit.constraint = constraint;
  a.fit.n_points = out.fit.n_points;
  a.fit.objective_value = out.fit.objective_value;
  a.frontier = frontier_laws_of(out.frontier);
  if (out.bopt && (out.bopt->pooled.power_fitted || out.bopt->pooled.linear_fitted))
    a.bopt_law = out.bopt->pooled;
  a.presets = default_presets();
  a.provenance["runs"] = std::to_string(runs.size());
  a.provenance["curves"] = std::to_string(curves.size());
  if (!runs.source.empty()) a.provenance["source"] = runs.source;
  a.provenance["smoothing"] = smoothing_name(options);
  a.provenance["frontier_rule"] = std::string(to_string(options.frontier_rule));
  a.provenance["frontier_points"] = std::to_string(out.frontier.points_fitted);
  a.provenance["fit_points_per_decade"] = std::to_string(options.fit_points_per_decade);
  a.provenance["constraint"] = options.constraint ? "given" : "fitted N_opt";
  a.provenance["huber_delta"] = format_double(out.fit.huber_delta);
  a.validate();
  return out;
}

}  // namespace scalelaw
