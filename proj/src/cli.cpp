#include "scalelaw/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "json_util.hpp"
#include "scalelaw/advisor.hpp"
#include "scalelaw/artifact.hpp"
#include "scalelaw/bslaw.hpp"
#include "scalelaw/error.hpp"
#include "scalelaw/format.hpp"
#include "scalelaw/frontier.hpp"
#include "scalelaw/io.hpp"
#include "scalelaw/lawfit.hpp"
#include "scalelaw/lrlaw.hpp"
#include "scalelaw/noisescale.hpp"
#include "scalelaw/pipeline.hpp"
#include "scalelaw/runlog.hpp"
#include "scalelaw/synth.hpp"

namespace scalelaw {

namespace {

using jsonutil::ordered_json;

// Where a verb's document and its human summary go. The document goes to
// --output when given, otherwise to stdout; the summary then moves to stderr
// so stdout stays machine-readable.
struct Sink {
  std::ostream& out;
  std::ostream& err;
  bool json = false;
  std::string output;

  void document(const std::string& text) const {
    if (output.empty())
      out << text;
    else
      write_file_atomic(output, text);
  }
  std::ostream& summary() const { return output.empty() ? err : out; }
  // Summary line(s) in text mode, the diagnostics object with --json.
  void report(const std::string& text, const ordered_json& diag) const {
    if (json) {
      ordered_json doc{{"ok", true}};
      doc.update(diag);
      summary() << jsonutil::dump(doc);
    } else {
      summary() << text;
    }
  }
};

ordered_json power_law_json(const PowerLaw& law) {
  return {{"k", law.k}, {"p", law.p}, {"x_min", law.x_min}, {"x_max", jsonutil::finite_or_null(law.x_max)}};
}

ordered_json law_json(const ChinchillaLaw& law) {
  return {{"E", law.E}, {"A", law.A}, {"alpha", law.alpha}, {"Bcoef", law.Bcoef}, {"beta", law.beta}};
}

ordered_json bopt_law_json(const BoptLaw& law) {
  return {{"k", law.k},
          {"p", law.p},
          {"s_floor", law.s_floor},
          {"crossover_D", jsonutil::finite_or_null(law.crossover_D)},
          {"power_fitted", law.power_fitted},
          {"linear_fitted", law.linear_fitted},
          {"D_min", law.D_min},
          {"D_max", jsonutil::finite_or_null(law.D_max)}};
}

ordered_json strings_json(const std::vector<std::string>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

ordered_json fit_report_json(const FitReport& r) {
  ordered_json j{{"law", law_json(r.law)},
                 {"r_squared", jsonutil::finite_or_null(r.r_squared)},
                 {"huber_delta", r.huber_delta},
                 {"n_points", r.n_points},
                 {"objective_value", jsonutil::finite_or_null(r.objective_value)},
                 {"iterations", r.iterations},
                 {"converged", r.converged},
                 {"converged_starts", r.converged_starts},
                 {"init_grid_winner", {{"index", r.init_grid_winner.index},
                                       {"Bcoef", r.init_grid_winner.Bcoef},
                                       {"E", r.init_grid_winner.E},
                                       {"beta", r.init_grid_winner.beta}}}};
  if (r.constraint)
    j["constraint"] = {{"a", r.constraint->a}, {"b", r.constraint->b}, {"p", r.constraint->p},
                       {"q", r.constraint->q}};
  else
    j["constraint"] = nullptr;
  return j;
}

ordered_json frontier_json(const FrontierExtraction& ex, const FrontierReport& rep) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : rep.points)
    pts.push_back({{"C", p.C}, {"loss", p.loss}, {"N", p.N}, {"D", p.D}, {"S", p.S}, {"B", p.B},
                   {"run_id", p.run_id}, {"truncated", p.truncated}});
  ordered_json excluded = ordered_json::array();
  for (double n : ex.excluded_models) excluded.push_back(n);
  return {{"points", pts},
          {"points_fitted", rep.points_fitted},
          {"L_opt", power_law_json(rep.L_opt)},
          {"N_opt", power_law_json(rep.N_opt)},
          {"D_opt", power_law_json(rep.D_opt)},
          {"S_opt", power_law_json(rep.S_opt)},
          {"B_opt", power_law_json(rep.B_opt)},
          {"residuals", {{"max_nd_violation", rep.residuals.max_nd_violation},
                         {"max_sb_violation", rep.residuals.max_sb_violation},
                         {"D_opt_free", power_law_json(rep.residuals.D_opt_free)},
                         {"B_opt_free", power_law_json(rep.residuals.B_opt_free)}}},
          {"excluded_models", excluded},
          {"warnings", strings_json(ex.warnings)}};
}

ordered_json bopt_report_json(const BoptReport& rep) {
  ordered_json models = ordered_json::array();
  for (const auto& m : rep.models) {
    ordered_json verts = ordered_json::array();
    for (const auto& v : m.vertices)
      verts.push_back({{"loss_level", v.loss_level}, {"B_star", v.B_star}, {"D_star", v.D_star},
                       {"curvature", v.curvature}, {"extrapolated", v.extrapolated}});
    models.push_back({{"n_params", m.n_params},
                      {"vertices", verts},
                      {"law", m.law ? bopt_law_json(*m.law) : ordered_json(nullptr)}});
  }
  ordered_json levels = ordered_json::array();
  for (double l : rep.loss_levels) levels.push_back(l);
  return {{"loss_levels", levels}, {"models", models}, {"pooled", bopt_law_json(rep.pooled)},
          {"warnings", strings_json(rep.warnings)}};
}

SmoothingMode parse_smoothing(const std::string& name, bool& smooth) {
  smooth = name != "none";
  if (name == "log_local" || name == "none") return SmoothingMode::log_local;
  if (name == "ema") return SmoothingMode::ema;
  throw ValidationError("unknown smoothing '" + name + "' (log_local, ema, none)");
}

RunSet runs_of_model(const RunSet& runs, std::optional<double> n_params) {
  const auto sizes = runs.model_sizes();
  if (sizes.empty()) throw InsufficientDataError("no runs");
  double n = sizes.front();
  if (n_params) {
    auto it = std::find_if(sizes.begin(), sizes.end(),
                           [&](double s) { return std::abs(s / *n_params - 1.0) < 1e-9; });
    if (it == sizes.end()) throw ValidationError("no runs with n_params " + format_double(*n_params));
    n = *it;
  } else if (sizes.size() > 1) {
    throw ValidationError("runs cover " + std::to_string(sizes.size()) +
                          " model sizes; pick one with --n-params");
  }
  RunSet out;
  out.source = runs.source;
  for (const auto& [id, run] : runs)
    if (run.model.n_params == n) out.add(run);
  return out;
}

// Largest token count every finished run of the sweep reaches.
double common_checkpoint(const RunSet& runs) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& [id, run] : runs)
    if (!run.diverged) d = std::min(d, run.total_tokens());
  if (!std::isfinite(d)) throw InsufficientDataError("every run diverged");
  return d;
}

void add_smoothing_option(CLI::App* sub, std::string& target) {
  sub->add_option("--smoothing", target, "Curve smoothing: log_local (default), ema or none")
      ->check(CLI::IsMember({"log_local", "ema", "none"}));
}

void add_output_option(CLI::App* sub, std::string& target, const std::string& what) {
  sub->add_option("-o,--output", target, what + " (written atomically; stdout when omitted)");
}

// ---- verbs -----------------------------------------------------------------

struct IngestArgs {
  std::string input;
  bool lenient = false;
};

void do_ingest(const IngestArgs& a, const Sink& sink) {
  ParseResult parsed = parse_runs_text(read_file(a.input), !a.lenient);
  parsed.runs.source = a.input;
  sink.document(serialize_runs(parsed.runs));
  std::string text = "ingested " + std::to_string(parsed.runs.size()) + " runs from " + a.input + "\n";
  ordered_json rejected = ordered_json::array();
  for (const auto& r : parsed.rejected) {
    text += "  rejected line " + std::to_string(r.line) + ": " + r.message + "\n";
    rejected.push_back({{"line", r.line}, {"message", r.message}});
  }
  sink.report(text, {{"verb", "ingest"}, {"runs", parsed.runs.size()}, {"rejected", rejected}});
}

struct SimulateArgs {
  std::string config, truth, preset = "published", write_truth, write_config;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  unsigned threads = 0;
};

void do_simulate(const SimulateArgs& a, Sink sink) {
  SynthConfig cfg = a.config.empty() ? (a.preset == "lr-sweep" ? lr_sweep_config() : paper_shaped_config())
                                     : synth_config_from_json(read_file(a.config));
  GroundTruth gt = a.truth.empty() ? paper_ground_truth() : ground_truth_from_json(read_file(a.truth));
  apply_seed_override(gt);
  if (a.seed) gt.seed = *a.seed;
  if (a.noise) gt.observation_noise = *a.noise;
  gt.validate();
  cfg.validate();
  if (sink.output.empty()) sink.output = cfg.output;
  const RunSet runs = simulate_grid(cfg, gt, a.threads);
  sink.document(serialize_runs(runs));
  if (!a.write_truth.empty()) write_file_atomic(a.write_truth, ground_truth_to_json(gt));
  if (!a.write_config.empty()) write_file_atomic(a.write_config, synth_config_to_json(cfg));
  std::size_t diverged = 0;
  for (const auto& [id, run] : runs) diverged += run.diverged ? 1 : 0;
  const std::string dest = sink.output.empty() ? "stdout" : sink.output;
  sink.report("simulated " + std::to_string(runs.size()) + " runs (" + std::to_string(diverged) +
                  " diverged), seed " + std::to_string(gt.seed) + " -> " + dest + "\n",
              {{"verb", "simulate"}, {"runs", runs.size()}, {"diverged", diverged}, {"seed", gt.seed},
               {"output", dest}});
}

struct FitLawArgs {
  std::string runs, smoothing = "log_local", frontier_rule = "crossing";
  std::optional<double> constraint_a, constraint_p;
  double delta = 1e-3;
  unsigned threads = 0;
  bool no_bopt = false;
  std::size_t vertex_window = 5;
};

void do_fit_law(const FitLawArgs& a, const Sink& sink) {
  if (a.constraint_a.has_value() != a.constraint_p.has_value())
    throw ValidationError("--constraint-a and --constraint-p go together");
  RunSet runs = load_runs(a.runs);
  runs.source = a.runs;
  PipelineOptions opts;
  opts.smoothing = parse_smoothing(a.smoothing, opts.smooth);
  opts.frontier_rule = frontier_rule_from_string(a.frontier_rule);
  if (a.constraint_a) opts.constraint = Constraint::from_frontier(*a.constraint_a, *a.constraint_p);
  opts.fit.delta = a.delta;
  opts.fit.threads = a.threads;
  opts.fit_bopt = !a.no_bopt;
  opts.bopt.vertex_window = a.vertex_window;
  const PipelineResult res = fit_pipeline(runs, opts);
  sink.document(artifact_to_json(res.artifact));

  const ChinchillaLaw& l = res.fit.law;
  std::ostringstream text;
  text << "law: L = " << format_double(l.E) << " + " << format_double(l.A) << "/N^" << format_double(l.alpha)
       << " + " << format_double(l.Bcoef) << "/D^" << format_double(l.beta) << "\n"
       << "R^2 (log space): " << format_double(res.fit.r_squared) << " over " << res.fit.n_points
       << " points\n"
       << "frontier: N_opt ~ C^" << format_double(res.frontier.N_opt.p) << ", D_opt ~ C^"
       << format_double(res.frontier.D_opt.p) << " from " << res.frontier.points_fitted << " points\n";
  if (res.artifact.bopt_law)
    text << "batch law: B_opt = " << format_double(res.artifact.bopt_law->k) << " D^"
         << format_double(res.artifact.bopt_law->p) << "\n";
  for (const auto& w : res.warnings) text << "warning: " << w << "\n";
  ordered_json diag{{"verb", "fit-law"},
                    {"fit", fit_report_json(res.fit)},
                    {"frontier_exponents", {{"a", res.frontier.N_opt.p}, {"b", res.frontier.D_opt.p}}},
                    {"warnings", strings_json(res.warnings)}};
  if (res.artifact.bopt_law) diag["bopt_law"] = bopt_law_json(*res.artifact.bopt_law);
  sink.report(text.str(), diag);
}

struct FrontierArgs {
  std::string runs, smoothing = "log_local", frontier_rule = "crossing", envelope_csv;
  int per_decade = 64;
};

void do_frontier(const FrontierArgs& a, const Sink& sink) {
  const RunSet runs = load_runs(a.runs);
  bool smooth = true;
  const SmoothingMode mode = parse_smoothing(a.smoothing, smooth);
  const auto curves = prepare_curves(runs, smooth, mode);
  if (curves.empty()) throw InsufficientDataError("every run diverged");
  const auto env = compute_envelope(curves, compute_grid(curves, a.per_decade));
  const auto ex = extract_frontier(env, curves, frontier_rule_from_string(a.frontier_rule));
  const auto rep = frontier_laws(ex.points);
  sink.document(jsonutil::dump(frontier_json(ex, rep)));
  if (!a.envelope_csv.empty()) write_file_atomic(a.envelope_csv, envelope_csv(env));
  std::ostringstream text;
  text << "frontier from " << rep.points_fitted << " points (" << a.frontier_rule << " rule)\n"
       << "  L_opt = " << format_double(rep.L_opt.k) << " C^" << format_double(rep.L_opt.p) << "\n"
       << "  N_opt = " << format_double(rep.N_opt.k) << " C^" << format_double(rep.N_opt.p) << "\n"
       << "  D_opt = " << format_double(rep.D_opt.k) << " C^" << format_double(rep.D_opt.p) << "\n"
       << "  S_opt = " << format_double(rep.S_opt.k) << " C^" << format_double(rep.S_opt.p) << "\n"
       << "  B_opt = " << format_double(rep.B_opt.k) << " C^" << format_double(rep.B_opt.p) << "\n";
  for (const auto& w : ex.warnings) text << "warning: " << w << "\n";
  sink.report(text.str(), {{"verb", "frontier"},
                           {"points_fitted", rep.points_fitted},
                           {"a", rep.N_opt.p},
                           {"b", rep.D_opt.p},
                           {"warnings", strings_json(ex.warnings)}});
}

// Replaces one block of an artifact file in place.
template <typename Edit>
void update_artifact(const std::string& path, Edit edit) {
  LawArtifact artifact = load_artifact(path);
  edit(artifact);
  artifact.validate();
  write_file_atomic(path, artifact_to_json(artifact));
}

struct FitBoptArgs {
  std::string runs, smoothing = "log_local", into;
  std::vector<double> levels;
  std::size_t vertex_window = 5;
  std::optional<double> s_floor;
  bool include_extrapolated = false;
};

void do_fit_bopt(const FitBoptArgs& a, const Sink& sink) {
  const RunSet runs = load_runs(a.runs);
  bool smooth = true;
  const SmoothingMode mode = parse_smoothing(a.smoothing, smooth);
  const auto curves = prepare_curves(runs, smooth, mode);
  BoptPipelineOptions opts;
  opts.loss_levels = a.levels;
  opts.vertex_window = a.vertex_window;
  opts.include_extrapolated = a.include_extrapolated;
  opts.fit.s_floor_hint = a.s_floor;
  const BoptReport rep = bopt_pipeline(curves, opts);
  sink.document(jsonutil::dump(bopt_report_json(rep)));
  if (!a.into.empty()) update_artifact(a.into, [&](LawArtifact& art) { art.bopt_law = rep.pooled; });
  std::ostringstream text;
  text << "B_opt = " << format_double(rep.pooled.k) << " D^" << format_double(rep.pooled.p)
       << ", linear branch D/" << format_double(rep.pooled.s_floor) << "\n";
  for (const auto& m : rep.models)
    text << "  N=" << format_double(m.n_params) << ": " << m.vertices.size() << " vertices\n";
  for (const auto& w : rep.warnings) text << "warning: " << w << "\n";
  sink.report(text.str(), {{"verb", "fit-bopt"}, {"pooled", bopt_law_json(rep.pooled)},
                           {"warnings", strings_json(rep.warnings)}});
}

struct FitLrArgs {
  std::string runs, into;
  std::optional<double> n_params, checkpoint;
  int refinement = 8;
  bool raw = false;
  double plateau_tolerance = 0.05;
};

void do_fit_lr(const FitLrArgs& a, const Sink& sink) {
  const RunSet runs = runs_of_model(load_runs(a.runs), a.n_params);
  const double d = a.checkpoint ? *a.checkpoint : common_checkpoint(runs);
  SurfaceOptions sopts;
  sopts.smooth = !a.raw;
  const LossSurface surface = build_surface(runs, d, sopts);
  const auto samples = extract_lr_opt(surface, a.refinement);
  if (samples.empty()) throw InsufficientDataError("no LR optimum found on the surface");
  GammaOptions gopts;
  gopts.plateau_tolerance = a.plateau_tolerance;

  LrLaw law;
  law.base_lr = samples.front().lr;
  law.base_B = samples.front().B;
  std::string note;
  try {
    const GammaFit g = fit_gamma(samples, gopts);
    law.gamma = g.gamma;
    law.lr_ceiling = g.lr_ceiling;
    law.plateau_onset_B = g.plateau_onset_B;
  } catch (const GammaUndefinedError& e) {
    // Only the plateau is observed: keep the ceiling, leave gamma open.
    law.lr_ceiling = e.ceiling();
    law.plateau_onset_B = e.onset();
    note = e.what();
  }
  ordered_json samples_json = ordered_json::array();
  for (const auto& s : samples)
    samples_json.push_back({{"B", s.B}, {"lr_scale", s.lr_scale}, {"lr", s.lr}, {"loss", s.loss},
                            {"boundary", s.boundary}});
  ordered_json doc{{"d_checkpoint", d},
                   {"base_lr", surface.base_lr()},
                   {"gamma", jsonutil::optional_value(law.gamma)},
                   {"lr_ceiling", jsonutil::optional_value(law.lr_ceiling)},
                   {"plateau_onset_B", jsonutil::optional_value(law.plateau_onset_B)},
                   {"anchor", {{"lr", law.base_lr}, {"B", law.base_B}}},
                   {"samples", samples_json}};
  sink.document(jsonutil::dump(doc));
  if (!a.into.empty()) update_artifact(a.into, [&](LawArtifact& art) { art.lr_law = law; });
  std::ostringstream text;
  text << "LR_opt ~ B^" << (law.gamma ? format_double(*law.gamma) : std::string("? (undefined)"));
  if (law.lr_ceiling) text << ", ceiling " << format_double(*law.lr_ceiling);
  text << " at D=" << format_double(d) << "\n";
  if (!note.empty()) text << "warning: " << note << "\n";
  sink.report(text.str(), {{"verb", "fit-lr"},
                           {"gamma", jsonutil::optional_value(law.gamma)},
                           {"lr_ceiling", jsonutil::optional_value(law.lr_ceiling)},
                           {"warnings", note.empty() ? ordered_json::array() : ordered_json::array({note})}});
}

struct TradeoffArgs {
  double gamma = 1.0;
  std::vector<double> ratios;
  bool csv = false;
};

void do_tradeoff(const TradeoffArgs& a, const Sink& sink) {
  const auto ratios = a.ratios.empty() ? default_tradeoff_ratios() : a.ratios;
  const auto rows = tradeoff_table(a.gamma, ratios);
  if (sink.json) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) arr.push_back({{"e", r.e_ratio}, {"s", r.s_ratio}, {"b", r.b_ratio}});
    sink.document(jsonutil::dump({{"gamma", a.gamma}, {"rows", arr}}));
  } else {
    sink.document(a.csv ? tradeoff_csv(rows) : tradeoff_text(rows));
  }
}

struct AdviseArgs {
  std::string laws, lr_rule = "linear";
  std::optional<double> compute, data, n_params, anchor_lr, anchor_batch;
  std::optional<double> reference_n, reference_d, candidate_d;
};

void do_advise(const AdviseArgs& a, const Sink& sink) {
  const int modes = a.compute.has_value() + a.data.has_value() + a.candidate_d.has_value();
  if (modes != 1)
    throw ValidationError("give exactly one of --compute, --data or --candidate-d; "
                          "compute and data budgets answer different questions");
  if (a.n_params && !a.data) throw ValidationError("--n-params applies to --data only");
  if (a.anchor_lr.has_value() != a.anchor_batch.has_value())
    throw ValidationError("--anchor-lr and --anchor-batch go together");
  const LawArtifact laws = load_artifact(a.laws);

  if (a.candidate_d) {
    if (!a.reference_n || !a.reference_d)
      throw ValidationError("--candidate-d needs --reference-n and --reference-d");
    if (laws.form != "chinchilla") throw ValidationError("compression needs a chinchilla-form law");
    const CompressionResult c = compress_query(laws.law, *a.reference_n, *a.reference_d, *a.candidate_d);
    const ordered_json doc{{"mode", "compress"},
                           {"reference", {{"N", *a.reference_n}, {"D", *a.reference_d}}},
                           {"candidate_D", *a.candidate_d},
                           {"target_loss", c.target_loss},
                           {"N_small", c.N_small},
                           {"inference_ratio", c.inference_ratio}};
    if (sink.json) {
      sink.document(jsonutil::dump(doc));
    } else {
      sink.document("target loss " + format_double(c.target_loss) + ": N_small = " +
                    format_double(c.N_small) + " on D = " + format_double(*a.candidate_d) +
                    ", inference ratio " + format_double(c.inference_ratio) + "\n");
    }
    return;
  }
  if (a.reference_n || a.reference_d)
    throw ValidationError("--reference-n and --reference-d apply to --candidate-d only");

  AdviceOptions opts;
  opts.lr_rule = lr_scale_rule_from_string(a.lr_rule);
  if (a.anchor_lr) opts.anchor = LrAnchor{*a.anchor_lr, *a.anchor_batch};
  const Recommendation rec =
      a.compute ? advise_compute(laws, *a.compute, opts) : advise_data(laws, *a.data, a.n_params, opts);
  sink.document(sink.json ? recommendation_json(rec) : recommendation_text(rec));
}

struct ExportArgs {
  std::string runs, kind, smoothing = "log_local";
  std::optional<double> n_params, checkpoint;
  std::vector<double> levels;
};

void do_export(const ExportArgs& a, const Sink& sink) {
  const RunSet all = load_runs(a.runs);
  bool smooth = true;
  const SmoothingMode mode = parse_smoothing(a.smoothing, smooth);
  std::string csv;
  if (a.kind == "curves") {
    const auto curves = prepare_curves(all, smooth, mode);
    csv = "run_id,n_params,batch_size_tokens,step,tokens,flops,loss\n";
    for (const auto& c : curves)
      for (const auto& p : c.points)
        csv += c.run_id + "," + format_double(c.n_params) + "," + format_double(c.batch_size_tokens) + "," +
               std::to_string(p.step) + "," + format_double(p.tokens) + "," +
               format_double(flops(c.n_params, p.tokens)) + "," + format_double(p.loss) + "\n";
  } else if (a.kind == "envelope") {
    const auto curves = prepare_curves(all, smooth, mode);
    csv = envelope_csv(compute_envelope(curves, compute_grid(curves)));
  } else if (a.kind == "contours") {
    const RunSet runs = runs_of_model(all, a.n_params);
    BoptPipelineOptions opts;
    opts.loss_levels = a.levels;
    const BoptReport rep = bopt_pipeline(prepare_curves(runs, smooth, mode), opts);
    if (rep.models.empty()) throw InsufficientDataError("no contours for this model");
    csv = contour_csv(rep.models.front().contours, rep.models.front().vertices);
  } else if (a.kind == "surface" || a.kind == "lr-opt") {
    const RunSet runs = runs_of_model(all, a.n_params);
    SurfaceOptions sopts;
    sopts.smooth = smooth;
    const LossSurface surface = build_surface(runs, a.checkpoint ? *a.checkpoint : common_checkpoint(runs), sopts);
    csv = a.kind == "surface" ? surface_csv(surface) : lr_opt_csv(extract_lr_opt(surface));
  } else {
    throw ValidationError("unknown plot kind '" + a.kind + "'");
  }
  sink.document(csv);
}

std::string error_json(const std::string& kind, const std::string& message) {
  return jsonutil::dump({{"ok", false}, {"error", kind}, {"message", message}});
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scaling-law toolkit: fit, inspect and apply loss, frontier, batch-size and LR laws",
               "scalelaw"};
  app.require_subcommand(1);
  bool json = false;

  std::string output;

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Validate run-log JSONL and write it in canonical form");
  s_ingest->add_option("-i,--input", ingest.input, "Run-log JSONL file")->required();
  s_ingest->add_flag("--lenient", ingest.lenient, "Skip malformed lines and report them instead of failing");
  add_output_option(s_ingest, output, "Canonical JSONL");

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Generate synthetic runs from a planted ground truth");
  s_sim->add_option("--config", sim.config, "Sweep config JSON (default: built-in preset)");
  s_sim->add_option("--truth", sim.truth, "Ground-truth JSON (default: published law and noise model)");
  s_sim->add_option("--preset", sim.preset, "Built-in sweep when --config is absent: published or lr-sweep")
      ->check(CLI::IsMember({"published", "lr-sweep"}));
  s_sim->add_option("--seed", sim.seed, "Seed; overrides the truth file and SCALELAW_SEED");
  s_sim->add_option("--noise", sim.noise, "Observation noise sigma (multiplicative, log-normal)");
  s_sim->add_option("--threads", sim.threads, "Worker threads (0: all cores); output does not depend on it");
  s_sim->add_option("--write-truth", sim.write_truth, "Also write the ground truth used");
  s_sim->add_option("--write-config", sim.write_config, "Also write the sweep config used");
  add_output_option(s_sim, output, "Runs JSONL (default: the config's output path)");

  FitLawArgs fit;
  auto* s_fit = app.add_subcommand("fit-law", "Fit frontier, loss law and batch law; write a law artifact");
  s_fit->add_option("--runs", fit.runs, "Run-log JSONL")->required();
  add_smoothing_option(s_fit, fit.smoothing);
  s_fit->add_option("--frontier-rule", fit.frontier_rule, "Frontier point rule: crossing (default) or midpoint")
      ->check(CLI::IsMember({"crossing", "midpoint"}));
  s_fit->add_option("--constraint-a", fit.constraint_a, "Fix the allocation exponent a (N_opt = p C^a)");
  s_fit->add_option("--constraint-p", fit.constraint_p, "Fix the allocation coefficient p");
  s_fit->add_option("--delta", fit.delta, "Huber delta on log residuals");
  s_fit->add_option("--threads", fit.threads, "Worker threads for the multi-start fit (0: all cores)");
  s_fit->add_flag("--no-bopt", fit.no_bopt, "Skip the batch-size law");
  s_fit->add_option("--vertex-window", fit.vertex_window, "Contour points per parabola fit (0: all)");
  add_output_option(s_fit, output, "Law artifact JSON");

  FrontierArgs fr;
  auto* s_fr = app.add_subcommand("frontier", "Extract the compute-efficient frontier and its power laws");
  s_fr->add_option("--runs", fr.runs, "Run-log JSONL")->required();
  add_smoothing_option(s_fr, fr.smoothing);
  s_fr->add_option("--frontier-rule", fr.frontier_rule, "Frontier point rule: crossing (default) or midpoint")
      ->check(CLI::IsMember({"crossing", "midpoint"}));
  s_fr->add_option("--grid-per-decade", fr.per_decade, "Compute grid density of the envelope");
  s_fr->add_option("--envelope-csv", fr.envelope_csv, "Also write the envelope as CSV");
  add_output_option(s_fr, output, "Frontier report JSON");

  FitBoptArgs bo;
  auto* s_bo = app.add_subcommand("fit-bopt", "Fit the data-budget optimal batch-size law from iso-loss contours");
  s_bo->add_option("--runs", bo.runs, "Run-log JSONL")->required();
  add_smoothing_option(s_bo, bo.smoothing);
  s_bo->add_option("--levels", bo.levels, "Loss levels, comma separated (default: spread of final losses)")
      ->delimiter(',');
  s_bo->add_option("--vertex-window", bo.vertex_window, "Contour points per parabola fit (0: all)");
  s_bo->add_option("--s-floor", bo.s_floor, "Steps of the linear small-data branch");
  s_bo->add_flag("--include-extrapolated", bo.include_extrapolated, "Keep vertices outside the sampled batches");
  s_bo->add_option("--into", bo.into, "Law artifact to update with the pooled law");
  add_output_option(s_bo, output, "Batch-law report JSON");

  FitLrArgs lr;
  auto* s_lr = app.add_subcommand("fit-lr", "Fit the optimal-LR growth exponent and ceiling of one model");
  s_lr->add_option("--runs", lr.runs, "Run-log JSONL of a batch x LR sweep")->required();
  s_lr->add_option("--n-params", lr.n_params, "Model size to use when the runs cover several");
  s_lr->add_option("--checkpoint-tokens", lr.checkpoint, "Token count the surface is read at (default: shortest run)");
  s_lr->add_option("--refinement", lr.refinement, "Samples per grid cell along B");
  s_lr->add_flag("--raw", lr.raw, "Read losses without smoothing");
  s_lr->add_option("--plateau-tolerance", lr.plateau_tolerance, "Relative LR spread that counts as the plateau");
  s_lr->add_option("--into", lr.into, "Law artifact to update with the LR law");
  add_output_option(s_lr, output, "LR-law report JSON");

  TradeoffArgs tr;
  auto* s_tr = app.add_subcommand("tradeoff", "Steps/examples trade-off grid at fixed loss");
  s_tr->add_option("--gamma", tr.gamma, "Trade-off constant");
  s_tr->add_option("--ratios", tr.ratios, "B/B_crit values, comma separated (default: 0.1..10)")->delimiter(',');
  s_tr->add_flag("--csv", tr.csv, "CSV instead of the aligned table");
  add_output_option(s_tr, output, "Table");

  AdviseArgs ad;
  auto* s_ad = app.add_subcommand("advise", "Recommend N, D, S, B and LR for a compute or data budget");
  s_ad->add_option("--laws", ad.laws, "Law artifact JSON (data/paper.json holds the published laws)")->required();
  s_ad->add_option("--compute", ad.compute, "Compute budget in FLOPs");
  s_ad->add_option("--data", ad.data, "Data budget in tokens");
  s_ad->add_option("--n-params", ad.n_params, "Model size for data-budget advice (LR preset and loss)");
  s_ad->add_option("--lr-rule", ad.lr_rule, "LR scaling from the anchor batch: linear (default), sqrt or none")
      ->check(CLI::IsMember({"linear", "sqrt", "none"}));
  s_ad->add_option("--anchor-lr", ad.anchor_lr, "Known good LR replacing the preset anchor");
  s_ad->add_option("--anchor-batch", ad.anchor_batch, "Batch size in tokens of --anchor-lr");
  s_ad->add_option("--reference-n", ad.reference_n, "Compression query: reference model size");
  s_ad->add_option("--reference-d", ad.reference_d, "Compression query: reference data");
  s_ad->add_option("--candidate-d", ad.candidate_d, "Compression query: larger data budget to train on");
  add_output_option(s_ad, output, "Recommendation");

  ExportArgs ex;
  auto* s_ex = app.add_subcommand("export-plot", "Write plot data as CSV");
  s_ex->add_option("--runs", ex.runs, "Run-log JSONL")->required();
  s_ex->add_option("--kind", ex.kind, "curves, envelope, contours, surface or lr-opt")
      ->required()
      ->check(CLI::IsMember({"curves", "envelope", "contours", "surface", "lr-opt"}));
  add_smoothing_option(s_ex, ex.smoothing);
  s_ex->add_option("--n-params", ex.n_params, "Model size for contours, surface and lr-opt");
  s_ex->add_option("--checkpoint-tokens", ex.checkpoint, "Token count for surface and lr-opt");
  s_ex->add_option("--levels", ex.levels, "Loss levels for contours, comma separated")->delimiter(',');
  add_output_option(s_ex, output, "CSV");

  for (CLI::App* sub : app.get_subcommands({}))
    sub->add_flag("--json", json, "JSON diagnostics and error reports (JSON documents where text is the default)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Sink sink{out, err, json, output};
  try {
    if (s_ingest->parsed()) do_ingest(ingest, sink);
    else if (s_sim->parsed()) do_simulate(sim, sink);
    else if (s_fit->parsed()) do_fit_law(fit, sink);
    else if (s_fr->parsed()) do_frontier(fr, sink);
    else if (s_bo->parsed()) do_fit_bopt(bo, sink);
    else if (s_lr->parsed()) do_fit_lr(lr, sink);
    else if (s_tr->parsed()) do_tradeoff(tr, sink);
    else if (s_ad->parsed()) do_advise(ad, sink);
    else if (s_ex->parsed()) do_export(ex, sink);
    return 0;
  } catch (const FitFailure& e) {
    if (json) {
      ordered_json doc{{"ok", false}, {"error", "numerical"}, {"message", e.what()},
                       {"partial", fit_report_json(e.partial())}};
      out << jsonutil::dump(doc);
    } else {
      err << "error: " << e.what() << "\npartial fit:\n" << jsonutil::dump(fit_report_json(e.partial()));
    }
    return 2;
  } catch (const Error& e) {
    const bool numerical = e.kind() == ErrorKind::numerical;
    if (json)
      out << error_json(numerical ? "numerical" : "validation", e.what());
    else
      err << "error: " << e.what() << "\n";
    return numerical ? 2 : 1;
  } catch (const std::exception& e) {
    if (json)
      out << error_json("numerical", e.what());
    else
      err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace scalelaw
