#include "scalelaw/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <thread>

#include "scalelaw/error.hpp"
#include "scalelaw/format.hpp"
#include "scalelaw/lrlaw.hpp"
#include "scalelaw/presets.hpp"

namespace scalelaw {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform in (0, 1].
double unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53; }

void require_positive(double v, const std::string& name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(name + " must be positive");
}

// Ground truth with the contour minimum cached.
struct Planted {
  const GroundTruth& gt;
  double b_star = 0.0;
  double g_star = 0.0;

  explicit Planted(const GroundTruth& g) : gt(g) {
    if (gt.bcrit.mode == BcritMode::data_linked)
      std::tie(b_star, g_star) = contour_minimum(gt.noise().gamma_tradeoff, gt.small_batch_penalty);
  }

  double floor(double n) const { return gt.law.E + gt.law.A * std::pow(n, -gt.law.alpha); }

  double d_min(double n, double loss) const {
    return std::pow(gt.law.Bcoef / (loss - floor(n)), 1.0 / gt.law.beta);
  }

  double b_crit(double loss, double dmin) const {
    switch (gt.bcrit.mode) {
      case BcritMode::constant: return gt.bcrit.B_crit0;
      case BcritMode::loss_linked: return gt.bcrit.B_crit0 * gt.bcrit.L0 / loss;
      case BcritMode::data_linked:
        return gt.bcrit.k * std::pow(g_star * dmin, gt.bcrit.p) / b_star;
    }
    return gt.bcrit.B_crit0;
  }

  double d_required(double n, double loss, double B) const {
    if (!(loss > floor(n)))
      throw RangeError("target loss " + format_double(loss) + " is at or below the floor",
                       floor(n));
    const double dmin = d_min(n, loss);
    const double b = B / b_crit(loss, dmin);
    const double e = solve_tradeoff(b, gt.noise().gamma_tradeoff).e_ratio;
    return dmin * (e + gt.small_batch_penalty / b);
  }

  double loss_at(double n, double B, double tokens) const {
    const double lo0 = floor(n);
    double lo = lo0, hi = lo0 + 1.0;
    while (d_required(n, hi, B) > tokens) {
      lo = hi;
      hi = lo0 + 2.0 * (hi - lo0);
      if (hi > 1e6) throw NumericalError("loss inversion failed to bracket");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo0) break;
      if (d_required(n, mid, B) > tokens)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }
};

}  // namespace

void GroundTruth::validate() const {
  scalelaw::validate(law);
  noise_sgd.validate();
  noise_adam.validate();
  switch (bcrit.mode) {
    case BcritMode::constant: require_positive(bcrit.B_crit0, "bcrit.B_crit0"); break;
    case BcritMode::loss_linked:
      require_positive(bcrit.B_crit0, "bcrit.B_crit0");
      require_positive(bcrit.L0, "bcrit.L0");
      break;
    case BcritMode::data_linked:
      require_positive(bcrit.k, "bcrit.k");
      if (!(bcrit.p > 0.0 && bcrit.p < 1.0)) throw ValidationError("bcrit.p must lie in (0, 1)");
      if (!(small_batch_penalty > 0.0))
        throw ValidationError("data_linked critical batch needs small_batch_penalty > 0");
      break;
  }
  if (!(small_batch_penalty >= 0.0)) throw ValidationError("small_batch_penalty must be >= 0");
  if (!(observation_noise >= 0.0)) throw ValidationError("observation_noise must be >= 0");
}

void SynthConfig::validate() const {
  if (models.empty() || batch_sizes.empty() || lr_schemes.empty() || lr_factors.empty())
    throw ValidationError("synth config needs models, batch sizes, LR schemes and LR factors");
  for (const auto& m : models) {
    require_positive(m.n_params, "model n_params");
    require_positive(m.base_lr, "model base_lr");
    if (m.warmup_steps < 0 || m.decay_steps < 0)
      throw ValidationError("model warmup/decay steps must be >= 0");
  }
  for (double b : batch_sizes) require_positive(b, "batch size");
  for (double f : lr_factors) require_positive(f, "LR factor");
  require_positive(lr_base_batch_tokens, "lr_base_batch_tokens");
  require_positive(total_tokens, "total_tokens");
  require_positive(checkpoint_tokens, "checkpoint_tokens");
  if (total_tokens < *std::max_element(batch_sizes.begin(), batch_sizes.end()))
    throw ValidationError("total_tokens must cover at least one step of every batch size");
}

GroundTruth paper_ground_truth() {
  GroundTruth gt;
  gt.law = {1.48, 314.35, 0.331, 460.51, 0.286};
  // Optimal LR factor is 1 at the 0.5M base batch for both optimizer families.
  const double b_noise = 6.4e7, base = 5e5;
  gt.noise_adam = {0.5 * (std::sqrt(b_noise / base) + std::sqrt(base / b_noise)), b_noise, 1.0, 1.0};
  gt.noise_sgd = {1.0 + b_noise / base, b_noise, 1.0, 1.0};
  gt.optimizer = Optimizer::adam;
  gt.bcrit = {BcritMode::data_linked, 0.0, 0.0, 3.24e3, 0.264};
  gt.small_batch_penalty = 0.0625;
  gt.lr_efficiency = true;
  gt.observation_noise = 0.005;
  gt.seed = 20240601;
  return gt;
}

SynthConfig paper_shaped_config() {
  SynthConfig c;
  for (const auto& p : default_presets())
    c.models.push_back({p.label, p.n_params, p.max_lr, p.warmup_steps, p.decay_steps});
  c.batch_sizes = {5e5, 1e6, 2e6, 4e6, 8e6, 1.6e7, 3.2e7};
  c.lr_schemes = {LrScheme::origin, LrScheme::sqrt_scaled, LrScheme::linear_scaled};
  c.lr_factors = {1.0};
  c.lr_base_batch_tokens = 5e5;
  c.total_tokens = 3e11;
  c.checkpoint_tokens = 2.5e8;
  c.output = "runs.jsonl";
  return c;
}

SynthConfig lr_sweep_config() {
  SynthConfig c;
  const Preset p = default_presets()[1];
  c.models.push_back({p.label, p.n_params, p.max_lr, p.warmup_steps, p.decay_steps});
  c.batch_sizes = {5e5, 1e6, 2e6, 4e6, 8e6, 1.6e7, 3.2e7};
  c.lr_schemes = {LrScheme::origin};
  for (int k = -4; k <= 10; ++k) c.lr_factors.push_back(std::pow(2.0, k / 2.0));
  c.lr_base_batch_tokens = 5e5;
  c.total_tokens = 2e10;
  c.checkpoint_tokens = 1e8;
  c.output = "lr_sweep.jsonl";
  return c;
}

std::pair<double, double> contour_minimum(double gamma, double c) {
  if (!(c > 0.0)) throw ValidationError("contour minimum needs a positive small-batch penalty");
  auto g = [&](double x) {
    const double b = std::exp(x);
    return solve_tradeoff(b, gamma).e_ratio + c / b;
  };
  double lo = std::log(1e-8), hi = std::log(1e8);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = g(x1), f2 = g(x2);
  while (hi - lo > 1e-13) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = g(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = g(x2);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {std::exp(x), g(x)};
}

double critical_batch_for(const GroundTruth& gt, double n_params, double loss) {
  const Planted planted(gt);
  return planted.b_crit(loss, planted.d_min(n_params, loss));
}

double d_required(const GroundTruth& gt, double n_params, double target_loss, double B) {
  return Planted(gt).d_required(n_params, target_loss, B);
}

double loss_at_effective_tokens(const GroundTruth& gt, double n_params, double B, double tokens) {
  return Planted(gt).loss_at(n_params, B, tokens);
}

double lr_efficiency(const GroundTruth& gt, double B, double lr_factor) {
  if (!gt.lr_efficiency) return 1.0;
  const double eta = gt.optimizer == Optimizer::adam ? eta_opt_adam(B, gt.noise_adam)
                                                     : eta_opt_sgd(B, gt.noise_sgd);
  const double rho = lr_factor / eta;
  return 2.0 * rho - rho * rho;
}

double keyed_normal(std::uint64_t seed, const std::string& run_id, std::int64_t step) {
  std::uint64_t state = splitmix64(seed) ^ splitmix64(fnv1a(run_id)) ^
                        splitmix64(static_cast<std::uint64_t>(step) * 0xd1b54a32d192ed03ULL);
  const double u1 = unit(state = splitmix64(state));
  const double u2 = unit(splitmix64(state));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RunRecord simulate_curve(const GroundTruth& gt, const CurveSpec& spec) {
  const Planted planted(gt);
  const double B = spec.batch_size_tokens;
  RunRecord run;
  run.run_id = spec.run_id;
  run.model.n_params = spec.model.n_params;
  run.model.label = spec.model.label;
  run.batch_size_tokens = B;
  run.lr_peak = spec.model.base_lr * spec.lr_factor;
  run.lr_scheme = spec.scheme;
  run.lr_scale = spec.lr_factor;
  run.warmup_steps = spec.model.warmup_steps;
  run.decay_steps = spec.model.decay_steps;

  const auto total_steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(spec.total_tokens / B));
  const std::int64_t cadence = std::max<std::int64_t>(1, spec.cadence_steps);
  std::vector<std::int64_t> steps;
  for (std::int64_t s = cadence; s <= total_steps; s += cadence) steps.push_back(s);
  if (steps.empty() || steps.back() != total_steps) steps.push_back(total_steps);

  const double eff = lr_efficiency(gt, B, spec.lr_factor);
  if (!(eff > 0.0)) {
    // Planted divergence: loss climbs for a few checkpoints, then blows up.
    run.diverged = true;
    const double start = planted.loss_at(spec.model.n_params, B, B * static_cast<double>(steps[0]));
    const std::size_t n = std::min<std::size_t>(steps.size(), 10);
    for (std::size_t k = 0; k < n; ++k) {
      const double loss = k + 1 == n ? std::numeric_limits<double>::quiet_NaN()
                                     : start * (1.0 + 0.1 * static_cast<double>(k));
      run.points.push_back({steps[k], B * static_cast<double>(steps[k]), loss});
    }
    return run;
  }
  for (std::int64_t s : steps) {
    const double tokens = B * static_cast<double>(s);
    double loss = planted.loss_at(spec.model.n_params, B, tokens * eff);
    if (gt.observation_noise > 0.0)
      loss *= std::exp(gt.observation_noise * keyed_normal(gt.seed, spec.run_id, s));
    run.points.push_back({s, tokens, loss});
  }
  return run;
}

std::string run_id_for(const SynthModel& model, double B, LrScheme scheme, double lr_factor) {
  const std::string name = model.label.empty() ? "N" + format_double(model.n_params) : model.label;
  return name + "-B" + format_double(B) + "-" + std::string(to_string(scheme)) + "-x" + format_double(lr_factor);
}

RunSet simulate_grid(const SynthConfig& config, const GroundTruth& gt, unsigned threads) {
  config.validate();
  gt.validate();
  std::vector<CurveSpec> specs;
  for (const auto& m : config.models)
    for (double B : config.batch_sizes)
      for (LrScheme s : config.lr_schemes)
        for (double f : config.lr_factors) {
          const LrScaleRule rule = s == LrScheme::linear_scaled ? LrScaleRule::linear
                                   : s == LrScheme::sqrt_scaled ? LrScaleRule::sqrt
                                                                : LrScaleRule::none;
          CurveSpec spec;
          spec.run_id = run_id_for(m, B, s, f);
          spec.model = m;
          spec.batch_size_tokens = B;
          spec.lr_factor = f * scale_lr(1.0, config.lr_base_batch_tokens, B, rule);
          spec.scheme = s;
          spec.total_tokens = config.total_tokens;
          spec.cadence_steps = std::max<std::int64_t>(1, std::llround(config.checkpoint_tokens / B));
          specs.push_back(std::move(spec));
        }

  std::vector<RunRecord> runs(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < specs.size();) {
      try {
        runs[i] = simulate_curve(gt, specs[i]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(specs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  RunSet set;
  for (auto& r : runs) set.add(std::move(r));
  set.source = "synthetic";
  return set;
}

void apply_seed_override(GroundTruth& gt) {
  const char* env = std::getenv("SCALELAW_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw ValidationError(std::string("SCALELAW_SEED is not an integer: ") + env);
  gt.seed = v;
}

}  // namespace scalelaw
