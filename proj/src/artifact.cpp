#include "scalelaw/artifact.hpp"

#include <cmath>
#include <limits>

#include "json_util.hpp"
#include "scalelaw/io.hpp"

namespace scalelaw {

using jsonutil::ordered_json;
namespace ju = jsonutil;

namespace {

ordered_json to_json(const ChinchillaLaw& law) {
  return {{"E", law.E}, {"A", law.A}, {"alpha", law.alpha}, {"Bcoef", law.Bcoef}, {"beta", law.beta}};
}

ChinchillaLaw chinchilla_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"E", "A", "alpha", "Bcoef", "beta"}, ctx);
  return {ju::number(j, "E", ctx), ju::number(j, "A", ctx), ju::number(j, "alpha", ctx),
          ju::number(j, "Bcoef", ctx), ju::number(j, "beta", ctx)};
}

ordered_json to_json(const KaplanLaw& law) {
  return {{"Nc", law.Nc}, {"Dc", law.Dc}, {"alpha_N", law.alpha_N}, {"alpha_D", law.alpha_D}};
}

KaplanLaw kaplan_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"Nc", "Dc", "alpha_N", "alpha_D"}, ctx);
  return {ju::number(j, "Nc", ctx), ju::number(j, "Dc", ctx), ju::number(j, "alpha_N", ctx),
          ju::number(j, "alpha_D", ctx)};
}

ordered_json to_json(const PowerLaw& law) {
  return {{"k", law.k}, {"p", law.p}, {"x_min", law.x_min}, {"x_max", ju::finite_or_null(law.x_max)}};
}

PowerLaw power_law_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"k", "p", "x_min", "x_max"}, ctx);
  return {ju::number(j, "k", ctx), ju::number(j, "p", ctx), ju::number(j, "x_min", ctx),
          ju::number_or_inf(j, "x_max", ctx)};
}

ordered_json to_json(const Constraint& c) {
  return {{"a", c.a}, {"b", c.b}, {"p", c.p}, {"q", c.q}};
}

Constraint constraint_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"a", "b", "p", "q"}, ctx);
  return {ju::number(j, "a", ctx), ju::number(j, "b", ctx), ju::number(j, "p", ctx),
          ju::number(j, "q", ctx)};
}

ordered_json to_json(const BoptLaw& law) {
  return {{"k", law.k},
          {"p", law.p},
          {"s_floor", law.s_floor},
          {"crossover_D", ju::finite_or_null(law.crossover_D)},
          {"power_fitted", law.power_fitted},
          {"linear_fitted", law.linear_fitted},
          {"D_min", law.D_min},
          {"D_max", ju::finite_or_null(law.D_max)}};
}

BoptLaw bopt_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"k", "p", "s_floor", "crossover_D", "power_fitted", "linear_fitted", "D_min", "D_max"},
                  ctx);
  BoptLaw law;
  law.k = ju::number(j, "k", ctx);
  law.p = ju::number(j, "p", ctx);
  law.s_floor = ju::number(j, "s_floor", ctx);
  law.crossover_D = ju::number_or_inf(j, "crossover_D", ctx);
  law.power_fitted = ju::boolean(j, "power_fitted", ctx);
  law.linear_fitted = ju::boolean(j, "linear_fitted", ctx);
  law.D_min = ju::number(j, "D_min", ctx);
  law.D_max = ju::number_or_inf(j, "D_max", ctx);
  return law;
}

ordered_json to_json(const LrLaw& law) {
  return {{"gamma", ju::optional_value(law.gamma)},
          {"gamma_range", {law.gamma_lo, law.gamma_hi}},
          {"lr_ceiling", ju::optional_value(law.lr_ceiling)},
          {"plateau_onset_B", ju::optional_value(law.plateau_onset_B)},
          {"base_lr", law.base_lr},
          {"base_B", law.base_B}};
}

LrLaw lr_law_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"gamma", "gamma_range", "lr_ceiling", "plateau_onset_B", "base_lr", "base_B"}, ctx);
  LrLaw law;
  law.gamma = ju::optional_number(j, "gamma", ctx);
  const auto& range = ju::field(j, "gamma_range", ctx);
  if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number())
    throw ValidationError(ctx + ": gamma_range must be a pair of numbers");
  law.gamma_lo = range[0].get<double>();
  law.gamma_hi = range[1].get<double>();
  law.lr_ceiling = ju::optional_number(j, "lr_ceiling", ctx);
  law.plateau_onset_B = ju::optional_number(j, "plateau_onset_B", ctx);
  law.base_lr = ju::number(j, "base_lr", ctx);
  law.base_B = ju::number(j, "base_B", ctx);
  return law;
}

ordered_json to_json(const Preset& p) {
  return {{"label", p.label},
          {"n_params", p.n_params},
          {"batch_size_tokens", p.batch_size_tokens},
          {"max_lr", p.max_lr},
          {"warmup_steps", p.warmup_steps},
          {"decay_steps", p.decay_steps}};
}

Preset preset_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"label", "n_params", "batch_size_tokens", "max_lr", "warmup_steps", "decay_steps"},
                  ctx);
  return {ju::text(j, "label", ctx),         ju::number(j, "n_params", ctx),
          ju::number(j, "batch_size_tokens", ctx), ju::number(j, "max_lr", ctx),
          ju::integer(j, "warmup_steps", ctx), ju::integer(j, "decay_steps", ctx)};
}

const ordered_json* present(const ordered_json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() || it->is_null() ? nullptr : &*it;
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(what + " must be positive and finite");
}

}  // namespace

FrontierLaws frontier_laws_of(const FrontierReport& report) {
  return {report.L_opt, report.N_opt, report.D_opt, report.S_opt, report.B_opt};
}

void LawArtifact::validate() const {
  if (form == "chinchilla") {
    scalelaw::validate(law);
  } else if (form == "kaplan") {
    if (!kaplan) throw ValidationError("kaplan artifact has no kaplan parameters");
    scalelaw::validate(*kaplan);
  } else {
    throw ValidationError("unknown law form '" + form + "'");
  }
  if (!(fit.delta > 0.0)) throw ValidationError("fit.delta must be positive");
  if (fit.constraint) fit.constraint->validate();
  if (frontier) {
    for (const PowerLaw* p : {&frontier->L_opt, &frontier->N_opt, &frontier->D_opt, &frontier->S_opt,
                              &frontier->B_opt})
      require_positive(p->k, "frontier law coefficient");
  }
  if (bopt_law) {
    require_positive(bopt_law->s_floor, "bopt_law.s_floor");
    if (bopt_law->power_fitted) require_positive(bopt_law->k, "bopt_law.k");
  }
  if (lr_law) {
    require_positive(lr_law->base_lr, "lr_law.base_lr");
    require_positive(lr_law->base_B, "lr_law.base_B");
    if (lr_law->lr_ceiling) require_positive(*lr_law->lr_ceiling, "lr_law.lr_ceiling");
    if (!(lr_law->gamma_lo <= lr_law->gamma_hi))
      throw ValidationError("lr_law.gamma_range must be ordered");
  }
  for (const auto& p : presets) {
    require_positive(p.n_params, "preset n_params");
    require_positive(p.batch_size_tokens, "preset batch_size_tokens");
    require_positive(p.max_lr, "preset max_lr");
  }
}

std::string artifact_to_json(const LawArtifact& a) {
  ordered_json doc;
  doc["form"] = a.form;
  doc["params"] = a.form == "kaplan" && a.kaplan ? to_json(*a.kaplan) : to_json(a.law);
  doc["fit"] = {{"r_squared", ju::optional_value(a.fit.r_squared)},
                {"delta", a.fit.delta},
                {"constraint", a.fit.constraint ? to_json(*a.fit.constraint) : ordered_json(nullptr)},
                {"n_points", a.fit.n_points ? ordered_json(*a.fit.n_points) : ordered_json(nullptr)},
                {"objective_value", ju::optional_value(a.fit.objective_value)}};
  if (a.frontier) {
    doc["frontier"] = {{"L_opt", to_json(a.frontier->L_opt)},
                       {"N_opt", to_json(a.frontier->N_opt)},
                       {"D_opt", to_json(a.frontier->D_opt)},
                       {"S_opt", to_json(a.frontier->S_opt)},
                       {"B_opt", to_json(a.frontier->B_opt)}};
  } else {
    doc["frontier"] = nullptr;
  }
  doc["bopt_law"] = a.bopt_law ? to_json(*a.bopt_law) : ordered_json(nullptr);
  doc["lr_law"] = a.lr_law ? to_json(*a.lr_law) : ordered_json(nullptr);
  doc["presets"] = ordered_json::array();
  for (const auto& p : a.presets) doc["presets"].push_back(to_json(p));
  doc["references"] = ordered_json::object();
  for (const auto& [name, row] : a.references)
    doc["references"][name] = {
        {"a", row.a},
        {"b", row.b},
        {"chinchilla", row.chinchilla ? to_json(*row.chinchilla) : ordered_json(nullptr)},
        {"kaplan", row.kaplan ? to_json(*row.kaplan) : ordered_json(nullptr)}};
  doc["notes"] = ordered_json::object();
  for (const auto& [k, v] : a.notes) doc["notes"][k] = v;
  doc["provenance"] = ordered_json::object();
  for (const auto& [k, v] : a.provenance) doc["provenance"][k] = v;
  return ju::dump(doc);
}

LawArtifact artifact_from_json(const std::string& text) {
  const ordered_json doc = ju::parse_document(text, "law artifact");
  ju::only_fields(doc, {"form", "params", "fit", "frontier", "bopt_law", "lr_law", "presets", "references",
                        "notes", "provenance"},
                  "artifact");
  LawArtifact a;
  a.form = ju::text(doc, "form", "artifact");
  if (a.form == "kaplan")
    a.kaplan = kaplan_from(ju::field(doc, "params", "artifact"), "params");
  else
    a.law = chinchilla_from(ju::field(doc, "params", "artifact"), "params");

  const auto& fit = ju::field(doc, "fit", "artifact");
  ju::only_fields(fit, {"r_squared", "delta", "constraint", "n_points", "objective_value"}, "fit");
  a.fit.r_squared = ju::optional_number(fit, "r_squared", "fit");
  a.fit.delta = ju::number(fit, "delta", "fit");
  if (const auto* c = present(fit, "constraint")) a.fit.constraint = constraint_from(*c, "fit.constraint");
  if (const auto* n = present(fit, "n_points")) {
    if (!n->is_number_unsigned()) throw ValidationError("fit: n_points must be a non-negative integer");
    a.fit.n_points = n->get<std::size_t>();
  }
  a.fit.objective_value = ju::optional_number(fit, "objective_value", "fit");

  if (const auto* f = present(doc, "frontier")) {
    ju::only_fields(*f, {"L_opt", "N_opt", "D_opt", "S_opt", "B_opt"}, "frontier");
    a.frontier = FrontierLaws{power_law_from(ju::field(*f, "L_opt", "frontier"), "frontier.L_opt"),
                              power_law_from(ju::field(*f, "N_opt", "frontier"), "frontier.N_opt"),
                              power_law_from(ju::field(*f, "D_opt", "frontier"), "frontier.D_opt"),
                              power_law_from(ju::field(*f, "S_opt", "frontier"), "frontier.S_opt"),
                              power_law_from(ju::field(*f, "B_opt", "frontier"), "frontier.B_opt")};
  }
  if (const auto* b = present(doc, "bopt_law")) a.bopt_law = bopt_from(*b, "bopt_law");
  if (const auto* l = present(doc, "lr_law")) a.lr_law = lr_law_from(*l, "lr_law");
  if (const auto* p = present(doc, "presets")) {
    if (!p->is_array()) throw ValidationError("presets must be an array");
    for (const auto& row : *p) a.presets.push_back(preset_from(row, "presets[]"));
  }
  if (const auto* r = present(doc, "references")) {
    ju::require_object(*r, "references");
    for (auto it = r->begin(); it != r->end(); ++it) {
      const std::string ctx = "references." + it.key();
      ju::only_fields(*it, {"a", "b", "chinchilla", "kaplan"}, ctx);
      ReferenceRow row;
      row.a = ju::number(*it, "a", ctx);
      row.b = ju::number(*it, "b", ctx);
      if (const auto* c = present(*it, "chinchilla")) row.chinchilla = chinchilla_from(*c, ctx);
      if (const auto* k = present(*it, "kaplan")) row.kaplan = kaplan_from(*k, ctx);
      a.references[it.key()] = row;
    }
  }
  for (const char* key : {"notes", "provenance"}) {
    const auto* block = present(doc, key);
    if (!block) continue;
    ju::require_object(*block, key);
    auto& target = std::string(key) == "notes" ? a.notes : a.provenance;
    for (auto it = block->begin(); it != block->end(); ++it) {
      if (!it->is_string()) throw ValidationError(std::string(key) + "." + it.key() + " must be a string");
      target[it.key()] = it->get<std::string>();
    }
  }
  a.validate();
  return a;
}

LawArtifact load_artifact(const std::string& path) {
  try {
    return artifact_from_json(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

LawArtifact paper_artifact() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  LawArtifact a;
  a.form = "chinchilla";
  a.law = {1.48, 314.35, 0.331, 460.51, 0.286};
  a.fit.r_squared = 0.962;
  a.fit.delta = 1e-3;
  a.fit.constraint = Constraint{0.464, 0.536, 0.297, 0.561};

  FrontierLaws f;
  f.L_opt = {23.00, -0.050, 0.0, inf};
  f.N_opt = {0.297, 0.464, 0.0, inf};
  f.D_opt = {0.561, 0.536, 0.0, inf};
  f.S_opt = {8.74e-5, 0.434, 0.0, inf};
  f.B_opt = {6.42e3, 0.102, 0.0, inf};
  // Valid once the optimal batch reaches the smallest batch in the sweep.
  f.B_opt.x_min = std::pow(5e5 / f.B_opt.k, 1.0 / f.B_opt.p);
  a.frontier = f;

  BoptLaw b;
  b.k = 3.24e3;
  b.p = 0.264;
  b.s_floor = 4000.0;
  b.crossover_D = std::pow(b.k * b.s_floor, 1.0 / (1.0 - b.p));
  b.power_fitted = true;
  b.linear_fitted = false;
  b.D_min = 0.0;
  b.D_max = inf;
  a.bopt_law = b;

  LrLaw lr;
  lr.gamma_lo = 0.75;
  lr.gamma_hi = 1.0;
  lr.lr_ceiling = 2.4e-3;
  lr.base_lr = 3e-4;
  lr.base_B = 5e5;
  a.lr_law = lr;

  a.presets = default_presets();

  a.references["GPT-3"] = {0.73, 0.27, std::nullopt, KaplanLaw{8.8e13, 5.4e13, 0.076, 0.095}};
  a.references["Chinchilla"] = {0.49, 0.51, ChinchillaLaw{1.69, 406.4, 0.34, 410.7, 0.28}, std::nullopt};
  a.references["PaLM-2"] = {0.49, 0.51, std::nullopt, std::nullopt};
  a.references["DeepSeek-LLM"] = {0.524, 0.476, std::nullopt, std::nullopt};
  a.references["Llama-3"] = {0.47, 0.53, std::nullopt, std::nullopt};

  a.notes["params"] =
      "Published loss law L = E + A/N^alpha + Bcoef/D^beta, fitted with a frontier constraint on GPT-style "
      "models from 125M to 2.6B non-embedding parameters";
  a.notes["fit"] =
      "r_squared was measured on the original training runs; constraint is the published compute-optimal "
      "allocation N = p C^a, D = q C^b";
  a.notes["frontier"] =
      "Published compute-budget laws (C in FLOPs, C = 6ND). B_opt applies only from the compute where it "
      "reaches 0.5M tokens; x_min records that point";
  a.notes["bopt_law"] =
      "Published data-budget batch law B_opt = k D^p (tokens). s_floor = 4000 steps is this toolkit's default "
      "for the linear small-data branch, not a published value";
  a.notes["lr_law"] =
      "350M sweep: optimal LR grows as B^gamma with gamma between 0.75 and 1 and levels off near 2.4e-3, "
      "8x the 0.5M-batch base LR of 3e-4. No single gamma was published";
  a.notes["presets"] = "GPT-3 style training recipes for the five reference model sizes";
  a.notes["references"] =
      "Compute-optimal exponents and loss laws reported by earlier scaling studies; GPT-3 uses the Kaplan form "
      "with alpha_N/alpha_D = 0.8";
  a.provenance["source"] = "published constants";
  return a;
}

}  // namespace scalelaw
