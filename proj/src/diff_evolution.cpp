#include "spherepol/diff_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spherepol/random.hpp"

namespace spherepol {

void DeOptions::validate(std::size_t dims) const {
  if (!(scaling_factor > 0.0)) {
    throw std::invalid_argument("de: scaling_factor must be positive");
  }
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) {
    throw std::invalid_argument("de: crossover_prob must be in [0, 1]");
  }
  if (population < 4) {
    throw std::invalid_argument("de: population must be at least 4");
  }
  if (max_generations < 1) {
    throw std::invalid_argument("de: max_generations must be at least 1");
  }
  if (!(tolerance >= 0.0)) {
    throw std::invalid_argument("de: tolerance must be non-negative");
  }
  if (stall_generations < 1) {
    throw std::invalid_argument("de: stall_generations must be at least 1");
  }
  if (dims == 0) {
    throw std::invalid_argument("de: objective must have at least one dimension");
  }
}

DeResult differential_evolution(const Objective& objective, std::span<const double> lower,
                                std::span<const double> upper, const DeOptions& options,
                                std::span<const std::vector<double>> initial) {
  const std::size_t dims = lower.size();
  if (upper.size() != dims) {
    throw std::invalid_argument("de: bound vectors must have equal length");
  }
  for (std::size_t d = 0; d < dims; ++d) {
    if (!(lower[d] < upper[d])) {
      throw std::invalid_argument("de: each lower bound must be below its upper bound");
    }
  }
  options.validate(dims);
  for (const auto& guess : initial) {
    if (guess.size() != dims) {
      throw std::invalid_argument("de: initial guesses must match the objective dimension");
    }
  }

  const int np = options.population;
  CounterRng rng(options.seed, /*stream=*/0x6465u);  // "de"

  std::vector<std::vector<double>> pop(np, std::vector<double>(dims));
  std::vector<double> fvals(np);
  DeResult result;

  for (int i = 0; i < np; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      pop[i][d] = lower[d] + rng.uniform() * (upper[d] - lower[d]);
    }
    if (i < static_cast<int>(initial.size())) {
      for (std::size_t d = 0; d < dims; ++d) {
        pop[i][d] = std::clamp(initial[i][d], lower[d], upper[d]);
      }
    }
    fvals[i] = objective(pop[i]);
    ++result.evaluations;
  }

  int best = static_cast<int>(std::min_element(fvals.begin(), fvals.end()) - fvals.begin());
  double best_f = fvals[best];

  std::vector<double> trial(dims);
  int stalled = 0;

  for (int gen = 1; gen <= options.max_generations; ++gen) {
    const double gen_start_best = best_f;
    for (int i = 0; i < np; ++i) {
      int r1, r2, r3;
      do {
        r1 = static_cast<int>(rng.next_u64() % np);
      } while (r1 == i);
      do {
        r2 = static_cast<int>(rng.next_u64() % np);
      } while (r2 == i || r2 == r1);
      do {
        r3 = static_cast<int>(rng.next_u64() % np);
      } while (r3 == i || r3 == r1 || r3 == r2);

      const std::size_t j_rand = rng.next_u64() % dims;
      for (std::size_t d = 0; d < dims; ++d) {
        if (d == j_rand || rng.uniform() < options.crossover_prob) {
          double v = pop[r1][d] + options.scaling_factor * (pop[r2][d] - pop[r3][d]);
          trial[d] = std::clamp(v, lower[d], upper[d]);
        } else {
          trial[d] = pop[i][d];
        }
      }

      const double f_trial = objective(trial);
      ++result.evaluations;
      if (f_trial <= fvals[i]) {
        pop[i] = trial;
        fvals[i] = f_trial;
        if (f_trial < best_f) {
          best_f = f_trial;
          best = i;
        }
      }
    }

    result.generations = gen;
    const double improvement = gen_start_best - best_f;
    if (improvement <= options.tolerance * std::max(1.0, std::abs(best_f))) {
      if (++stalled >= options.stall_generations) {
        result.converged = true;
        break;
      }
    } else {
      stalled = 0;
    }
  }

  result.x = pop[best];
  result.fval = best_f;
  return result;
}

}  // namespace spherepol
