#include "spherepol/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spherepol {

NmResult nelder_mead(const Objective& objective, std::span<const double> x0,
                     std::span<const double> step, const NmOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
  if (step.size() != n) throw std::invalid_argument("nelder_mead: step size mismatch");

  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += step[i] != 0.0 ? step[i] : 1e-4;
  }
  std::vector<double> fvals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fvals[i] = objective(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  NmResult result;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    const double f_spread = std::abs(fvals[worst] - fvals[best]);
    double x_spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) {
        x_spread = std::max(x_spread, std::abs(simplex[i][d] - simplex[best][d]));
      }
    }
    if (f_spread <= options.f_tol * (std::abs(fvals[best]) + options.f_tol) &&
        x_spread <= options.x_tol) {
      result.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
    }
    for (std::size_t d = 0; d < n; ++d) centroid[d] /= static_cast<double>(n);

    for (std::size_t d = 0; d < n; ++d) {
      xr[d] = centroid[d] + kReflect * (centroid[d] - simplex[worst][d]);
    }
    const double fr = objective(xr);

    if (fr < fvals[best]) {
      for (std::size_t d = 0; d < n; ++d) {
        xe[d] = centroid[d] + kExpand * (xr[d] - centroid[d]);
      }
      const double fe = objective(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fvals[worst] = fe;
      } else {
        simplex[worst] = xr;
        fvals[worst] = fr;
      }
    } else if (fr < fvals[second_worst]) {
      simplex[worst] = xr;
      fvals[worst] = fr;
    } else {
      const bool outside = fr < fvals[worst];
      const std::vector<double>& base = outside ? xr : simplex[worst];
      for (std::size_t d = 0; d < n; ++d) {
        xc[d] = centroid[d] + kContract * (base[d] - centroid[d]);
      }
      const double fc = objective(xc);
      if (fc < (outside ? fr : fvals[worst])) {
        simplex[worst] = xc;
        fvals[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < n; ++d) {
            simplex[i][d] = simplex[best][d] + kShrink * (simplex[i][d] - simplex[best][d]);
          }
          fvals[i] = objective(simplex[i]);
        }
      }
    }
  }

  const std::size_t final_best =
      std::min_element(fvals.begin(), fvals.end()) - fvals.begin();
  result.x = simplex[final_best];
  result.fval = fvals[final_best];
  return result;
}

}  // namespace spherepol
