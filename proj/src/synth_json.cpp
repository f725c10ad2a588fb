#include "json_util.hpp"
#include "scalelaw/synth.hpp"

namespace scalelaw {

using jsonutil::ordered_json;
namespace ju = jsonutil;

namespace {

ordered_json to_json(const NoiseParams& n) {
  return {{"eta_max", n.eta_max},
          {"B_noise", n.B_noise},
          {"dL_max", n.dL_max},
          {"gamma_tradeoff", n.gamma_tradeoff}};
}

NoiseParams noise_from(const ordered_json& j, const std::string& ctx) {
  ju::only_fields(j, {"eta_max", "B_noise", "dL_max", "gamma_tradeoff"}, ctx);
  return {ju::number(j, "eta_max", ctx), ju::number(j, "B_noise", ctx), ju::number(j, "dL_max", ctx),
          ju::number(j, "gamma_tradeoff", ctx)};
}

const char* mode_name(BcritMode m) {
  switch (m) {
    case BcritMode::constant: return "constant";
    case BcritMode::loss_linked: return "loss_linked";
    case BcritMode::data_linked: return "data_linked";
  }
  return "constant";
}

BcritMode mode_from(const std::string& s) {
  if (s == "constant") return BcritMode::constant;
  if (s == "loss_linked") return BcritMode::loss_linked;
  if (s == "data_linked") return BcritMode::data_linked;
  throw ValidationError("bcrit.mode: unknown mode '" + s + "' (constant, loss_linked, data_linked)");
}

std::vector<double> number_list(const ordered_json& obj, const char* key, const std::string& ctx) {
  const auto& arr = ju::field(obj, key, ctx);
  if (!arr.is_array()) throw ValidationError(ctx + ": field '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw ValidationError(ctx + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string ground_truth_to_json(const GroundTruth& gt) {
  ordered_json doc;
  doc["law"] = {{"E", gt.law.E}, {"A", gt.law.A}, {"alpha", gt.law.alpha}, {"Bcoef", gt.law.Bcoef},
                {"beta", gt.law.beta}};
  doc["noise_sgd"] = to_json(gt.noise_sgd);
  doc["noise_adam"] = to_json(gt.noise_adam);
  doc["optimizer"] = gt.optimizer == Optimizer::adam ? "adam" : "sgd";
  doc["bcrit"] = {{"mode", mode_name(gt.bcrit.mode)},
                  {"B_crit0", gt.bcrit.B_crit0},
                  {"L0", gt.bcrit.L0},
                  {"k", gt.bcrit.k},
                  {"p", gt.bcrit.p}};
  doc["small_batch_penalty"] = gt.small_batch_penalty;
  doc["lr_efficiency"] = gt.lr_efficiency;
  doc["observation_noise"] = gt.observation_noise;
  doc["seed"] = gt.seed;
  return ju::dump(doc);
}

GroundTruth ground_truth_from_json(const std::string& text) {
  const auto doc = ju::parse_document(text, "ground truth");
  const std::string ctx = "ground truth";
  ju::only_fields(doc, {"law", "noise_sgd", "noise_adam", "optimizer", "bcrit", "small_batch_penalty",
                        "lr_efficiency", "observation_noise", "seed"},
                  ctx);
  GroundTruth gt;
  const auto& law = ju::field(doc, "law", ctx);
  ju::only_fields(law, {"E", "A", "alpha", "Bcoef", "beta"}, "law");
  gt.law = {ju::number(law, "E", "law"), ju::number(law, "A", "law"), ju::number(law, "alpha", "law"),
            ju::number(law, "Bcoef", "law"), ju::number(law, "beta", "law")};
  gt.noise_sgd = noise_from(ju::field(doc, "noise_sgd", ctx), "noise_sgd");
  gt.noise_adam = noise_from(ju::field(doc, "noise_adam", ctx), "noise_adam");
  const std::string opt = ju::text(doc, "optimizer", ctx);
  if (opt != "adam" && opt != "sgd") throw ValidationError("optimizer must be 'adam' or 'sgd'");
  gt.optimizer = opt == "adam" ? Optimizer::adam : Optimizer::sgd;
  const auto& bc = ju::field(doc, "bcrit", ctx);
  ju::only_fields(bc, {"mode", "B_crit0", "L0", "k", "p"}, "bcrit");
  gt.bcrit = {mode_from(ju::text(bc, "mode", "bcrit")), ju::number(bc, "B_crit0", "bcrit"),
              ju::number(bc, "L0", "bcrit"), ju::number(bc, "k", "bcrit"), ju::number(bc, "p", "bcrit")};
  gt.small_batch_penalty = ju::number(doc, "small_batch_penalty", ctx);
  gt.lr_efficiency = ju::boolean(doc, "lr_efficiency", ctx);
  gt.observation_noise = ju::number(doc, "observation_noise", ctx);
  const auto& seed = ju::field(doc, "seed", ctx);
  if (!seed.is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
  gt.seed = seed.get<std::uint64_t>();
  gt.validate();
  return gt;
}

std::string synth_config_to_json(const SynthConfig& c) {
  ordered_json doc;
  doc["models"] = ordered_json::array();
  for (const auto& m : c.models)
    doc["models"].push_back({{"label", m.label},
                             {"n_params", m.n_params},
                             {"base_lr", m.base_lr},
                             {"warmup_steps", m.warmup_steps},
                             {"decay_steps", m.decay_steps}});
  doc["batch_sizes"] = c.batch_sizes;
  doc["lr_schemes"] = ordered_json::array();
  for (LrScheme s : c.lr_schemes) doc["lr_schemes"].push_back(std::string(to_string(s)));
  doc["lr_factors"] = c.lr_factors;
  doc["lr_base_batch_tokens"] = c.lr_base_batch_tokens;
  doc["total_tokens"] = c.total_tokens;
  doc["checkpoint_tokens"] = c.checkpoint_tokens;
  doc["output"] = c.output;
  return ju::dump(doc);
}

SynthConfig synth_config_from_json(const std::string& text) {
  const auto doc = ju::parse_document(text, "synth config");
  const std::string ctx = "synth config";
  ju::only_fields(doc, {"models", "batch_sizes", "lr_schemes", "lr_factors", "lr_base_batch_tokens",
                        "total_tokens", "checkpoint_tokens", "output"},
                  ctx);
  SynthConfig c;
  const auto& models = ju::field(doc, "models", ctx);
  if (!models.is_array()) throw ValidationError(ctx + ": 'models' must be an array");
  for (const auto& m : models) {
    ju::only_fields(m, {"label", "n_params", "base_lr", "warmup_steps", "decay_steps"}, "models[]");
    c.models.push_back({ju::text(m, "label", "models[]"), ju::number(m, "n_params", "models[]"),
                        ju::number(m, "base_lr", "models[]"), ju::integer(m, "warmup_steps", "models[]"),
                        ju::integer(m, "decay_steps", "models[]")});
  }
  c.batch_sizes = number_list(doc, "batch_sizes", ctx);
  const auto& schemes = ju::field(doc, "lr_schemes", ctx);
  if (!schemes.is_array()) throw ValidationError(ctx + ": 'lr_schemes' must be an array");
  for (const auto& s : schemes) {
    if (!s.is_string()) throw ValidationError(ctx + ": 'lr_schemes' must hold strings");
    c.lr_schemes.push_back(lr_scheme_from_string(s.get<std::string>()));
  }
  c.lr_factors = number_list(doc, "lr_factors", ctx);
  c.lr_base_batch_tokens = ju::number(doc, "lr_base_batch_tokens", ctx);
  c.total_tokens = ju::number(doc, "total_tokens", ctx);
  c.checkpoint_tokens = ju::number(doc, "checkpoint_tokens", ctx);
  c.output = ju::text(doc, "output", ctx);
  c.validate();
  return c;
}

}  // namespace scalelaw
