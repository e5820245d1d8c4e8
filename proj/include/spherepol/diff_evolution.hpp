#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace spherepol {

using Objective = std::function<double(std::span<const double>)>;

struct DeOptions {
  double scaling_factor = 1.5;
  double crossover_prob = 0.9;
  int population = 32;
  int max_generations = 500;
  double tolerance = 1e-10;    // relative best-value improvement
  int stall_generations = 50;  // consecutive stalled generations to converge
  std::uint64_t seed = 0;

  void validate(std::size_t dims) const;
};

struct DeResult {
  std::vector<double> x;
  double fval = 0.0;
  int generations = 0;
  long evaluations = 0;
  bool converged = false;
};

// DE/rand/1/bin minimizer with box constraints.  Deterministic for a fixed
// seed; trial vectors are clamped to the bounds.  Entries of `initial`
// replace the leading random population members (clamped into the box).
DeResult differential_evolution(const Objective& objective, std::span<const double> lower,
                                std::span<const double> upper, const DeOptions& options = {},
                                std::span<const std::vector<double>> initial = {});

}  // namespace spherepol
