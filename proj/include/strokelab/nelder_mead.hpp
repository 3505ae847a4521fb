#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace strokelab::fitting {

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct NelderMeadOptions {
  std::size_t max_evaluations = 2000;
  double ftol = 1e-6;    // relative spread of simplex values
  double fatol = 1e-12;  // absolute floor on that spread
  double xtol = 1e-6;    // simplex diameter, in units of the initial steps
  std::size_t max_restarts = 6;
  std::vector<double> initial_step;  // per coordinate, non-zero
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::size_t restarts = 0;
  std::vector<double> best_trace;  // best value after each evaluation
};

// Folds x back into [lo, hi] by mirror reflection at the bounds.
double reflect_into(double x, double lo, double hi);

// Bounded Nelder-Mead simplex minimization. The objective must be pure:
// vertices of the initial simplex and of shrink steps are evaluated
// concurrently. A simplex that collapses before the value spread converges is
// rebuilt around the best point with half the previous step.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, const Bounds& bounds, const NelderMeadOptions& options);

}  // namespace strokelab::fitting
