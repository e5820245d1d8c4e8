#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace spherepol {

// Lumped cavity-coupling parameters for a single whispering-gallery mode
// probed through a tapered fiber.  x = sqrt(1-gamma) e^{-rho_l} is the
// round-trip amplitude, y = cos(kappa) the straight-through amplitude.
struct CavityParams {
  double gamma = 0.0;            // taper junction intensity loss
  double rho_l = 0.0;            // round-trip amplitude loss exponent
  double kappa = 0.0;            // coupling angle, rad
  double fsr_hz = 0.0;           // free spectral range
  double f_res_hz = 0.0;         // probed resonance frequency
  double t_all = 1.0;            // off-resonant taper intensity transmittance
  double theta_offset_rad = 0.0; // static birefringence offset between axes

  double x() const;
  double y() const;
  void validate() const;  // throws std::invalid_argument
};

// Exponential decay of the coupling angle with sphere-taper gap.
struct GapCouplingLaw {
  double kappa_0 = 0.0;       // coupling angle at contact, rad
  double decay_len_nm = 0.0;  // evanescent decay length

  double kappa_at(double gap_nm) const;
  void validate() const;
};

struct ComplexTransmission {
  std::complex<double> amplitude_ratio;  // A_out / A_in for the coupled axis
  double transmittance = 0.0;            // |ratio|^2
  double phase_rad = 0.0;                // wrapped to (-pi, pi]
};

struct SpectrumPoint {
  double detuning_hz = 0.0;
  double value = 0.0;
};

enum class CouplingRegime { Undercoupled, Critical, Overcoupled };

class NoDipError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AmbiguousDipError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// |y - x| below this counts as critically coupled.
inline constexpr double kCriticalTol = 1e-6;
// Denominator magnitude below this is treated as a pole of the response.
inline constexpr double kSingularityTol = 1e-15;

double wrap_pi(double angle_rad);

ComplexTransmission transmission(const CavityParams& params, double detuning_hz);

std::vector<ComplexTransmission> transmission_spectrum(const CavityParams& params,
                                                       std::span<const double> detunings_hz);

CouplingRegime coupling_regime(const CavityParams& params);

// Closed-form values of the model line shape.
double analytic_t_min(const CavityParams& params);
double analytic_baseline(const CavityParams& params);
double analytic_fwhm_hz(const CavityParams& params);

// Width of a sampled dip from half-depth threshold crossings, with the
// baseline estimated from the spectrum edges.  Points must be sorted by
// detuning.  Throws NoDipError / AmbiguousDipError.
double fwhm_hz(std::span<const SpectrumPoint> spectrum);

double quality_factor(double f_res_hz, double fwhm_hz, bool two_pi_convention = false);

CavityParams params_at_gap(const CavityParams& base, const GapCouplingLaw& law, double gap_nm);

// Gap at which the coupling crosses critical (cos kappa(d) == x).
double critical_gap_nm(const CavityParams& base, const GapCouplingLaw& law);

// Removes 2*pi jumps from a sequence of wrapped phases.
std::vector<double> unwrap_phase(std::span<const double> wrapped_rad);

}  // namespace spherepol
