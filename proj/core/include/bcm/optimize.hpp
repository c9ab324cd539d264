#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace bcm {

struct NelderMeadOptions {
  // Stop when the simplex spread in f is below f_tol * max(|f_best|, f_floor).
  double f_tol = 1e-6;
  double f_floor = 1e-12;
  // ... or when the simplex is this small in normalised [0,1] coordinates.
  double x_tol = 1e-10;
  double initial_step = 0.1;
  std::size_t max_evaluations = 4000;
  std::size_t restarts = 2;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Minimises f on the box [lo, hi] with a Nelder-Mead simplex. The search runs
// in coordinates scaled to [0, 1]; trial points are clamped onto the box.
// After convergence the simplex is rebuilt around the best point up to
// `restarts` times, stopping early once a restart gives no improvement.
OptimizeResult minimize_bounded(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x0, const std::vector<double>& lo,
                                const std::vector<double>& hi, const NelderMeadOptions& opts = {});

}  // namespace bcm
