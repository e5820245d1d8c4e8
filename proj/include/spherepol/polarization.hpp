#pragma once

#include <complex>
#include <stdexcept>

#include "spherepol/coupled_mode.hpp"

namespace spherepol {

// Transverse field amplitudes along the taper axes, V/m.
struct JonesField {
  std::complex<double> a_x{0.0, 0.0};  // axis coupled to the cavity mode
  std::complex<double> a_y{0.0, 0.0};  // orthogonal reference axis
  double frequency_hz = 0.0;
};

// Intensity-based Stokes parameters, W/m^2.
struct StokesVector {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  double degree_of_polarization() const;
};

// Photon counts for the six polarization projections over one exposure.
struct ProjectionCounts {
  double x = 0.0;
  double y = 0.0;
  double p = 0.0;  // +45 deg
  double m = 0.0;  // -45 deg
  double r = 0.0;  // right circular
  double l = 0.0;  // left circular
  double exposure_s = 0.0;
};

struct CountsStokes {
  StokesVector stokes;
  bool low_signal = false;
};

class IndeterminatePhaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transmits a field through the taper-cavity junction at the given detuning:
// the x axis acquires the cavity amplitude and phase, both axes share the
// off-resonant taper transmittance.  The static birefringence offset is not
// applied here; it belongs to the measurement model.
JonesField apply_cavity(const JonesField& in, const CavityParams& params, double detuning_hz);

StokesVector stokes_from_field(const JonesField& field);

// Stokes parameters in count units after dark subtraction.  Negative
// differences clamp to zero and set the low-signal flag.
CountsStokes stokes_from_counts(const ProjectionCounts& counts, double dark_rate_hz);

// Recovers the cavity phase from measured Stokes parameters, removing the
// probe's intrinsic phase difference and the birefringence offset.
// Throws IndeterminatePhaseError when the equatorial components vanish.
double extract_phase(const StokesVector& s, double arg_a0x_rad, double arg_a0y_rad,
                     double theta_offset_rad);

}  // namespace spherepol
