#include "scalelaw/advisor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json_util.hpp"
#include "scalelaw/format.hpp"

namespace scalelaw {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string law_text(const std::string& name, const PowerLaw& law) {
  return name + " = " + format_double(law.k) + " * x^" + format_double(law.p);
}

void flag_range(Recommendation& rec, const std::string& field, const std::string& name,
                const PowerLaw& law, double x) {
  if (!law.extrapolates(x)) return;
  rec.flags[field] = name + " extrapolated: " + sci(x) + " outside [" + sci(law.x_min) + ", " +
                     sci(law.x_max) + "]";
}

// Fills LR from an anchor (explicit, or the preset nearest N, or the LR law's
// base) scaled to rec.B and capped at the ceiling.
void set_lr(Recommendation& rec, const LawArtifact& laws, std::optional<double> n_for_preset,
            const AdviceOptions& options) {
  rec.lr_rule = options.lr_rule;
  std::string source;
  if (options.anchor) {
    rec.lr_anchor_lr = options.anchor->lr;
    rec.lr_anchor_B = options.anchor->batch_size_tokens;
    source = "explicit anchor";
  } else if (n_for_preset) {
    const std::vector<Preset> fallback = laws.presets.empty() ? default_presets() : std::vector<Preset>{};
    const auto& table = laws.presets.empty() ? fallback : laws.presets;
    const Preset& p = preset_lookup(table, *n_for_preset);
    rec.lr_anchor_lr = p.max_lr;
    rec.lr_anchor_B = p.batch_size_tokens;
    source = "preset " + p.label;
  } else if (laws.lr_law) {
    rec.lr_anchor_lr = laws.lr_law->base_lr;
    rec.lr_anchor_B = laws.lr_law->base_B;
    source = "lr_law base";
  } else {
    rec.flags["LR"] = "no anchor: give N, an explicit anchor, or an artifact with an lr_law";
    return;
  }
  double lr = scale_lr(*rec.lr_anchor_lr, *rec.lr_anchor_B, rec.B, options.lr_rule);
  source += " (" + format_double(*rec.lr_anchor_lr) + " at B=" + format_double(*rec.lr_anchor_B) +
            "), " + to_string(options.lr_rule) + " scaling";
  if (laws.lr_law && laws.lr_law->lr_ceiling && lr > *laws.lr_law->lr_ceiling) {
    lr = *laws.lr_law->lr_ceiling;
    source += ", capped at lr_ceiling";
    rec.flags["LR"] = "scaled LR exceeds the ceiling " + sci(lr) + "; capped";
  }
  rec.LR = lr;
  rec.provenance["LR"] = source;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be positive");
}

}  // namespace

Recommendation advise_compute(const LawArtifact& laws, double C, const AdviceOptions& options) {
  require_positive(C, "compute budget");
  if (!laws.frontier) throw ValidationError("compute advice needs an artifact with frontier laws");
  const FrontierLaws& f = *laws.frontier;
  Recommendation rec;
  rec.mode = "compute";
  rec.C = C;
  rec.N = f.N_opt(C);
  rec.D = C / (6.0 * *rec.N);
  rec.S = f.S_opt(C);
  rec.B = rec.D / rec.S;
  rec.predicted_loss = f.L_opt(C);
  rec.provenance["C"] = "given";
  rec.provenance["N"] = law_text("N_opt(C)", f.N_opt);
  rec.provenance["D"] = "C / (6 N)";
  rec.provenance["S"] = law_text("S_opt(C)", f.S_opt);
  rec.provenance["B"] = "D / S";
  rec.provenance["loss"] = law_text("L_opt(C)", f.L_opt);
  flag_range(rec, "N", "N_opt", f.N_opt, C);
  flag_range(rec, "S", "S_opt", f.S_opt, C);
  flag_range(rec, "loss", "L_opt", f.L_opt, C);
  if (C < f.B_opt.x_min)
    rec.flags["B"] = "C below the B_opt validity floor " + sci(f.B_opt.x_min) +
                     " FLOPs; batch law extrapolated";
  else
    flag_range(rec, "B", "B_opt", f.B_opt, C);
  if (laws.form == "chinchilla") {
    rec.law_loss = eval_chinchilla(laws.law, *rec.N, rec.D);
    rec.provenance["law_loss"] = "fitted L(N, D)";
  }
  set_lr(rec, laws, rec.N, options);
  return rec;
}

Recommendation advise_data(const LawArtifact& laws, double D, std::optional<double> N,
                           const AdviceOptions& options) {
  require_positive(D, "data budget");
  if (N) require_positive(*N, "model size");
  if (!laws.bopt_law) throw ValidationError("data advice needs an artifact with a bopt_law");
  const BoptLaw& law = *laws.bopt_law;
  Recommendation rec;
  rec.mode = "data";
  rec.N = N;
  rec.D = D;
  rec.B = law(D);
  rec.S = D / rec.B;
  const bool linear = !law.power_fitted || D / law.s_floor <= law.k * std::pow(D, law.p);
  rec.regime = linear ? "linear" : "power";
  rec.provenance["B"] = linear ? "B_opt(D) = D / " + format_double(law.s_floor) + " (linear branch)"
                               : "B_opt(D) = " + format_double(law.k) + " * D^" + format_double(law.p);
  rec.provenance["S"] = "D / B";
  rec.provenance["D"] = "given";
  if (N) rec.provenance["N"] = "given";
  if (D < law.D_min || D > law.D_max)
    rec.flags["B"] = "D outside the fitted range [" + sci(law.D_min) + ", " + sci(law.D_max) + "]";
  if (N && laws.form == "chinchilla") {
    rec.predicted_loss = eval_chinchilla(laws.law, *N, D);
    rec.provenance["loss"] = "fitted L(N, D)";
  }
  set_lr(rec, laws, N, options);
  return rec;
}

CompressionResult compress_query(const ChinchillaLaw& law, double N0, double D0, double candidate_D) {
  require_positive(N0, "reference model size");
  require_positive(D0, "reference data");
  require_positive(candidate_D, "candidate data");
  if (candidate_D < D0) throw ValidationError("candidate data must be at least the reference data");
  CompressionResult r;
  r.target_loss = eval_chinchilla(law, N0, D0);
  r.N_small = candidate_D == D0 ? N0 : solve_n_for_loss(law, r.target_loss, candidate_D);
  r.inference_ratio = N0 / r.N_small;
  return r;
}

std::string recommendation_json(const Recommendation& rec) {
  namespace ju = jsonutil;
  ju::ordered_json doc;
  doc["mode"] = rec.mode;
  doc["C"] = ju::optional_value(rec.C);
  doc["N"] = ju::optional_value(rec.N);
  doc["D"] = rec.D;
  doc["S"] = rec.S;
  doc["B"] = rec.B;
  doc["LR"] = ju::optional_value(rec.LR);
  doc["lr_anchor"] = rec.lr_anchor_lr ? ju::ordered_json{{"lr", *rec.lr_anchor_lr},
                                                         {"batch_size_tokens", *rec.lr_anchor_B},
                                                         {"rule", to_string(rec.lr_rule)}}
                                      : ju::ordered_json(nullptr);
  doc["predicted_loss"] = ju::optional_value(rec.predicted_loss);
  doc["law_loss"] = ju::optional_value(rec.law_loss);
  doc["regime"] = rec.regime.empty() ? ju::ordered_json(nullptr) : ju::ordered_json(rec.regime);
  doc["provenance"] = ju::ordered_json::object();
  for (const auto& [k, v] : rec.provenance) doc["provenance"][k] = v;
  doc["flags"] = ju::ordered_json::object();
  for (const auto& [k, v] : rec.flags) doc["flags"][k] = v;
  return ju::dump(doc);
}

std::string recommendation_text(const Recommendation& rec) {
  const std::vector<std::string> head{"N", "D", "FLOPs", "B", "LR", "S", "loss"};
  const double flops = rec.C ? *rec.C : (rec.N ? 6.0 * *rec.N * rec.D : NAN);
  const std::vector<std::string> row{
      rec.N ? sci(*rec.N) : "-",     sci(rec.D), std::isfinite(flops) ? sci(flops) : "-", sci(rec.B),
      rec.LR ? sci(*rec.LR) : "-",   sci(rec.S), rec.predicted_loss ? sci(*rec.predicted_loss) : "-"};
  std::string out;
  for (int line = 0; line < 2; ++line) {
    const auto& cells = line == 0 ? head : row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t width = std::max(head[i].size(), row[i].size());
      out += std::string(width - cells[i].size(), ' ') + cells[i];
      out += i + 1 < cells.size() ? "  " : "\n";
    }
  }
  if (!rec.regime.empty()) out += "regime: " + rec.regime + "\n";
  for (const auto& [field, source] : rec.provenance) out += "  " + field + ": " + source + "\n";
  for (const auto& [field, flag] : rec.flags) out += "  warning [" + field + "]: " + flag + "\n";
  return out;
}

}  // namespace scalelaw
