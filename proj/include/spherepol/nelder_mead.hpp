#pragma once

#include <span>
#include <vector>

#include "spherepol/diff_evolution.hpp"  // Objective

namespace spherepol {

struct NmOptions {
  int max_iterations = 4000;
  double f_tol = 1e-12;  // relative spread of simplex values
  double x_tol = 1e-10;  // absolute spread of simplex vertices
};

struct NmResult {
  std::vector<double> x;
  double fval = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Downhill simplex minimizer; `step` sets the initial simplex extent per
// coordinate.
NmResult nelder_mead(const Objective& objective, std::span<const double> x0,
                     std::span<const double> step, const NmOptions& options = {});

}  // namespace spherepol
