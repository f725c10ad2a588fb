#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalelaw/error.hpp"
#include "scalelaw/runlog.hpp"

namespace scalelaw {

// L(N, D) = E + A / N^alpha + Bcoef / D^beta
struct ChinchillaLaw {
  double E = 0.0;
  double A = 0.0;
  double alpha = 0.0;
  double Bcoef = 0.0;
  double beta = 0.0;

  bool operator==(const ChinchillaLaw&) const = default;
};

// L(N, D) = [(Nc / N)^(alpha_N / alpha_D) + Dc / D]^alpha_D
struct KaplanLaw {
  double Nc = 0.0;
  double Dc = 0.0;
  double alpha_N = 0.0;
  double alpha_D = 0.0;
};

void validate(const ChinchillaLaw& law);
void validate(const KaplanLaw& law);

double eval_chinchilla(const ChinchillaLaw& law, double n_params, double tokens);
double eval_kaplan(const KaplanLaw& law, double n_params, double tokens);

// Robust loss: quadratic inside |r| <= delta, linear outside.
double huber(double residual, double delta);

// Compute-optimal allocation N_opt = p C^a, D_opt = q C^b that the fitted
// law is forced to reproduce. Requires a + b = 1 and p q = 1/6 (C = 6 N D).
struct Constraint {
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;
  double q = 0.0;

  static Constraint from_frontier(double a, double p);
  void validate() const;

  bool operator==(const Constraint&) const = default;
};

struct ConstrainedPair {
  double A = 0.0;
  double alpha = 0.0;
};

// alpha = beta b / a;  A = Bcoef beta p^alpha / (alpha q^beta)
ConstrainedPair apply_constraint(const Constraint& c, double Bcoef, double beta);

struct FitPoint {
  double n_params = 0.0;
  double tokens = 0.0;
  double loss = 0.0;
};

// Fit data from prepared curves: for each model size, the lowest loss over its
// runs at log-spaced token counts (per_decade per decade of tokens), so runs
// at a poor batch size or LR do not drag the law away from the best case.
std::vector<FitPoint> envelope_fit_points(std::span<const RunCurve> curves, int per_decade = 16);

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;
  int points = 5;

  std::vector<double> log_spaced() const;
};

struct InitGrid {
  AxisRange Bcoef{10.0, 5000.0, 5};
  AxisRange E{0.5, 3.0, 5};
  AxisRange beta{0.1, 0.6, 5};

  std::size_t size() const;
};

struct InitPoint {
  std::size_t index = 0;
  double Bcoef = 0.0;
  double E = 0.0;
  double beta = 0.0;
};

struct FitOptions {
  double delta = 1e-3;
  InitGrid grid;
  int max_iterations = 500;
  double tolerance = 1e-12;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct FitReport {
  ChinchillaLaw law;
  double r_squared = 0.0;
  double huber_delta = 0.0;
  std::size_t n_points = 0;
  InitPoint init_grid_winner;
  std::optional<Constraint> constraint;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t converged_starts = 0;
};

class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& what, FitReport partial)
      : NumericalError(what), partial_(std::move(partial)) {}

  const FitReport& partial() const noexcept { return partial_; }

 private:
  FitReport partial_;
};

// Minimizes the summed Huber loss of log-residuals over (Bcoef, E, beta) with
// (A, alpha) tied to them by the constraint. Every grid point seeds a BFGS run;
// the lowest objective wins, ties to the lowest grid index.
FitReport constrained_fit(std::span<const FitPoint> data, const Constraint& constraint,
                          const FitOptions& options = {});

// Five-parameter variant with no structural constraint.
FitReport unconstrained_fit(std::span<const FitPoint> data, const FitOptions& options = {});

enum class RSquaredSpace { linear, log };

double r_squared(std::span<const double> predicted, std::span<const double> observed,
                 RSquaredSpace space = RSquaredSpace::log);

// Closed-form inverse of eval_chinchilla in N. Throws RangeError (carrying the
// floor E + Bcoef D^-beta) when the target is not above the data-limited floor.
double solve_n_for_loss(const ChinchillaLaw& law, double target_loss, double tokens);

}  // namespace scalelaw
