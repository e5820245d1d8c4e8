#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spherepol/coupled_mode.hpp"

namespace spherepol {

struct FitOptions {
  int multistarts = 8;
  int max_iterations = 4000;   // per Nelder-Mead start
  double phase_weight = 1.0;   // weight of phase residuals in joint fits
  bool use_de_fallback = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fitted line-shape parameters.  `params` carries the fitted gamma, rho_l and
// kappa together with the fixed instrument constants of the nominal input;
// `resonance_offset_hz` shifts the model dip relative to the detuning axis of
// the data.
struct FitResult {
  CavityParams params;
  double resonance_offset_hz = 0.0;
  double residual_rms = 0.0;
  // 1-sigma estimates for (gamma, rho_l, kappa, resonance offset).
  std::array<double, 4> param_stderr{};
  bool converged = false;
  // Set when the mirrored solution (coupling and loss amplitudes swapped)
  // fits the data equally well, i.e. the coupling regime is not identified.
  bool degenerate = false;
};

// Least-squares fit of the transmittance line shape.  `nominal` supplies the
// fixed instrument constants (FSR, resonance frequency, taper transmittance);
// gamma, rho_l, kappa and the resonance offset are fitted.  Detunings must be
// strictly increasing; NaN values are ignored.  `value_sigma`, when given,
// holds per-point standard deviations used as inverse-variance weights.
FitResult fit_transmittance(std::span<const SpectrumPoint> transmittance,
                            const CavityParams& nominal,
                            const std::optional<CavityParams>& initial = std::nullopt,
                            const FitOptions& options = {},
                            std::span<const double> value_sigma = {});

// Joint fit of transmittance and phase spectra on a common detuning grid.
// The phase branch distinguishes the coupling regimes, so the mirror
// degeneracy of the amplitude-only fit is lifted.  Throws
// InconsistentSpectraError when the grids differ or when no single parameter
// set can describe both spectra (joint residual far above the individual
// fits).
FitResult fit_joint(std::span<const SpectrumPoint> transmittance,
                    std::span<const SpectrumPoint> phase, const CavityParams& nominal,
                    const std::optional<CavityParams>& initial = std::nullopt,
                    const FitOptions& options = {},
                    std::span<const double> value_sigma = {},
                    std::span<const double> phase_sigma = {});

struct GapPoint {
  double gap_nm = 0.0;
  double t_min = 0.0;    // dip minimum, baseline-referenced units
  double fwhm_hz = 0.0;  // dip width
};

struct GapFitResult {
  GapCouplingLaw law;
  double critical_gap_nm = 0.0;
  bool critical_in_range = false;
  double residual_rms = 0.0;
  bool converged = false;
};

// Fits the exponential gap law (kappa_0, decay length) to per-gap dip minima
// and widths, with the loss parameters taken from `base`.
GapFitResult fit_gap_series(std::span<const GapPoint> points, const CavityParams& base,
                            const FitOptions& options = {});

}  // namespace spherepol
