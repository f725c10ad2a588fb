#pragma once

#include <functional>
#include <vector>

namespace scalelaw::detail {

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct MinimizeOptions {
  int max_iterations = 500;
  // Converged once a step improves the objective by less than this.
  double tolerance = 1e-12;
  double gradient_step = 1e-6;
};

// BFGS with central-difference gradients and Armijo backtracking. The
// objective may return +inf to mark infeasible points.
MinimizeResult bfgs(const std::function<double(const std::vector<double>&)>& f,
                    std::vector<double> x0, const MinimizeOptions& options);

}  // namespace scalelaw::detail
