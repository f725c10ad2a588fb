#include "scalelaw/lawfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "minimize.hpp"
#include "scalelaw/format.hpp"

namespace scalelaw {

void validate(const ChinchillaLaw& law) {
  if (!(law.E >= 0.0)) throw ValidationError("chinchilla law: E must be >= 0");
  if (!(law.A > 0.0) || !(law.Bcoef > 0.0))
    throw ValidationError("chinchilla law: A and B must be > 0");
  if (!(law.alpha > 0.0 && law.alpha < 1.0) || !(law.beta > 0.0 && law.beta < 1.0))
    throw ValidationError("chinchilla law: alpha and beta must lie in (0, 1)");
}

void validate(const KaplanLaw& law) {
  if (!(law.Nc > 0.0 && law.Dc > 0.0 && law.alpha_N > 0.0 && law.alpha_D > 0.0))
    throw ValidationError("kaplan law: all fields must be > 0");
}

double eval_chinchilla(const ChinchillaLaw& law, double n_params, double tokens) {
  return law.E + law.A * std::pow(n_params, -law.alpha) +
         law.Bcoef * std::pow(tokens, -law.beta);
}

double eval_kaplan(const KaplanLaw& law, double n_params, double tokens) {
  const double n_term = std::pow(law.Nc / n_params, law.alpha_N / law.alpha_D);
  const double d_term = std::isinf(tokens) ? 0.0 : law.Dc / tokens;
  return std::pow(n_term + d_term, law.alpha_D);
}

double huber(double residual, double delta) {
  const double r = std::abs(residual);
  if (r <= delta) return 0.5 * r * r;
  return delta * (r - 0.5 * delta);
}

Constraint Constraint::from_frontier(double a, double p) {
  Constraint c{a, 1.0 - a, p, 1.0 / (6.0 * p)};
  c.validate();
  return c;
}

void Constraint::validate() const {
  if (!(a > 0.0 && b > 0.0 && p > 0.0 && q > 0.0))
    throw ValidationError("constraint: a, b, p, q must be > 0");
  if (std::abs(a + b - 1.0) > 1e-9)
    throw ValidationError("constraint: a + b must equal 1, got " + format_double(a + b));
  // C = 6 N D forces p q = 1/6; a product near 6 is the common transcription slip.
  if (std::abs(6.0 * p * q - 1.0) > 0.01)
    throw ValidationError("constraint: p q must equal 1/6 (C = 6ND), got " +
                          format_double(p * q));
}

ConstrainedPair apply_constraint(const Constraint& c, double Bcoef, double beta) {
  ConstrainedPair out;
  out.alpha = beta * (c.b / c.a);
  out.A = Bcoef * (beta * std::pow(c.p, out.alpha)) / (out.alpha * std::pow(c.q, beta));
  return out;
}

std::vector<double> AxisRange::log_spaced() const {
  if (points < 1 || !(lo > 0.0) || !(hi >= lo))
    throw ValidationError("init grid axis needs 0 < lo <= hi and >= 1 point");
  std::vector<double> out;
  if (points == 1) return {std::sqrt(lo * hi)};
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < points; ++i)
    out.push_back(std::exp(llo + (lhi - llo) * i / (points - 1)));
  return out;
}

std::size_t InitGrid::size() const {
  return static_cast<std::size_t>(Bcoef.points) * E.points * beta.points;
}

namespace {

void check_span(std::span<const FitPoint> data) {
  std::set<double> ns, ds;
  for (const auto& p : data) {
    if (!(p.n_params > 0.0 && p.tokens > 0.0 && p.loss > 0.0) || !std::isfinite(p.loss))
      throw ValidationError("fit data must be positive and finite");
    ns.insert(p.n_params);
    ds.insert(p.tokens);
  }
  if (data.size() < 8 || ns.size() < 2 || ds.size() < 4)
    throw InsufficientDataError(
        "law fit needs >= 8 points spanning >= 2 model sizes and >= 4 token counts; got " +
        std::to_string(data.size()) + " points, " + std::to_string(ns.size()) + " sizes, " +
        std::to_string(ds.size()) + " token counts");
}

double objective(const ChinchillaLaw& law, std::span<const FitPoint> data, double delta) {
  double sum = 0.0;
  for (const auto& p : data) {
    const double pred = eval_chinchilla(law, p.n_params, p.tokens);
    if (!(pred > 0.0)) return std::numeric_limits<double>::infinity();
    sum += huber(std::log(pred) - std::log(p.loss), delta);
  }
  return sum;
}

struct StartResult {
  detail::MinimizeResult min;
  ChinchillaLaw law;
};

std::vector<InitPoint> grid_points(const InitGrid& grid) {
  const auto bs = grid.Bcoef.log_spaced();
  const auto es = grid.E.log_spaced();
  const auto betas = grid.beta.log_spaced();
  std::vector<InitPoint> out;
  for (double b : bs)
    for (double e : es)
      for (double be : betas) out.push_back({out.size(), b, e, be});
  return out;
}

// Evaluates every start (possibly in parallel) and reduces in grid order.
template <class Solve>
FitReport run_grid(std::span<const FitPoint> data, const FitOptions& options,
                   const std::optional<Constraint>& constraint, Solve solve) {
  check_span(data);
  const auto starts = grid_points(options.grid);
  std::vector<StartResult> results(starts.size());

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(starts.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < starts.size(); i += threads) results[i] = solve(starts[i]);
      });
  }

  std::size_t best = starts.size();
  std::size_t best_any = 0;
  std::size_t converged = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.min.value < results[best_any].min.value) best_any = i;
    if (!r.min.converged || !std::isfinite(r.min.value)) continue;
    ++converged;
    if (best == starts.size() || r.min.value < results[best].min.value) best = i;
  }

  FitReport report;
  report.huber_delta = options.delta;
  report.n_points = data.size();
  report.constraint = constraint;
  report.converged_starts = converged;
  const std::size_t pick = best == starts.size() ? best_any : best;
  report.law = results[pick].law;
  report.objective_value = results[pick].min.value;
  report.iterations = results[pick].min.iterations;
  report.init_grid_winner = starts[pick];
  report.converged = best != starts.size();

  if (std::isfinite(report.objective_value)) {
    std::vector<double> pred, obs;
    for (const auto& p : data) {
      pred.push_back(eval_chinchilla(report.law, p.n_params, p.tokens));
      obs.push_back(p.loss);
    }
    try {
      report.r_squared = r_squared(pred, obs);
    } catch (const Error&) {
      report.r_squared = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (!report.converged)
    throw FitFailure("no initialization converged; best objective " +
                         format_double(report.objective_value) + " from grid index " +
                         std::to_string(pick),
                     report);
  return report;
}

}  // namespace

FitReport constrained_fit(std::span<const FitPoint> data, const Constraint& constraint,
                          const FitOptions& options) {
  constraint.validate();
  auto make_law = [&](const std::vector<double>& x) {
    ChinchillaLaw law;
    law.Bcoef = std::exp(x[0]);
    law.E = std::exp(x[1]);
    law.beta = std::exp(x[2]);
    const auto pair = apply_constraint(constraint, law.Bcoef, law.beta);
    law.A = pair.A;
    law.alpha = pair.alpha;
    return law;
  };
  auto f = [&](const std::vector<double>& x) {
    const auto law = make_law(x);
    if (!(law.beta < 1.0 && law.alpha < 1.0)) return std::numeric_limits<double>::infinity();
    return objective(law, data, options.delta);
  };
  detail::MinimizeOptions mo{options.max_iterations, options.tolerance, 1e-6};
  return run_grid(data, options, constraint, [&](const InitPoint& s) {
    StartResult r;
    r.min = detail::bfgs(f, {std::log(s.Bcoef), std::log(s.E), std::log(s.beta)}, mo);
    r.law = make_law(r.min.x);
    return r;
  });
}

FitReport unconstrained_fit(std::span<const FitPoint> data, const FitOptions& options) {
  auto make_law = [](const std::vector<double>& x) {
    return ChinchillaLaw{std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]),
                         std::exp(x[4])};
  };
  auto f = [&](const std::vector<double>& x) {
    const auto law = make_law(x);
    if (!(law.beta < 1.0 && law.alpha < 1.0)) return std::numeric_limits<double>::infinity();
    return objective(law, data, options.delta);
  };
  detail::MinimizeOptions mo{options.max_iterations, options.tolerance, 1e-6};
  return run_grid(data, options, std::nullopt, [&](const InitPoint& s) {
    StartResult r;
    // A and alpha start mirrored from the data-side values.
    r.min = detail::bfgs(f,
                         {std::log(s.E), std::log(s.Bcoef), std::log(s.beta),
                          std::log(s.Bcoef), std::log(s.beta)},
                         mo);
    r.law = make_law(r.min.x);
    return r;
  });
}

double r_squared(std::span<const double> predicted, std::span<const double> observed,
                 RSquaredSpace space) {
  if (predicted.size() != observed.size() || observed.empty())
    throw ValidationError("r_squared needs equal, nonzero lengths");
  auto tf = [space](double v) { return space == RSquaredSpace::log ? std::log(v) : v; };
  double mean = 0.0;
  for (double o : observed) mean += tf(o);
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double o = tf(observed[i]);
    ss_res += (o - tf(predicted[i])) * (o - tf(predicted[i]));
    ss_tot += (o - mean) * (o - mean);
  }
  if (!(ss_tot > 0.0)) throw NumericalError("r_squared undefined: observed values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

double solve_n_for_loss(const ChinchillaLaw& law, double target_loss, double tokens) {
  const double floor = law.E + law.Bcoef * std::pow(tokens, -law.beta);
  if (!(target_loss > floor))
    throw RangeError("target loss " + format_double(target_loss) +
                         " is at or below the data-limited floor " + format_double(floor) +
                         " at D = " + format_double(tokens),
                     floor);
  return std::pow(law.A / (target_loss - floor), 1.0 / law.alpha);
}

std::vector<FitPoint> envelope_fit_points(std::span<const RunCurve> curves, int per_decade) {
  if (per_decade < 1) throw ValidationError("per_decade must be >= 1");
  std::map<double, std::vector<const RunCurve*>> by_model;
  for (const auto& c : curves)
    if (!c.points.empty()) by_model[c.n_params].push_back(&c);
  std::vector<FitPoint> out;
  for (const auto& [n, group] : by_model) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const RunCurve* c : group) {
      lo = std::min(lo, c->points.front().tokens);
      hi = std::max(hi, c->points.back().tokens);
    }
    const auto first = static_cast<long>(std::ceil(std::log10(lo) * per_decade - 1e-9));
    const auto last = static_cast<long>(std::floor(std::log10(hi) * per_decade + 1e-9));
    for (long i = first; i <= last; ++i) {
      const double d = std::pow(10.0, static_cast<double>(i) / per_decade);
      double best = std::numeric_limits<double>::infinity();
      for (const RunCurve* c : group) {
        auto l = loss_at_tokens(c->points, d);
        if (l && *l < best) best = *l;
      }
      if (std::isfinite(best)) out.push_back({n, d, best});
    }
  }
  return out;
}

}  // namespace scalelaw
