#include "spherepol/polarization.hpp"

#include <cmath>

#include "spherepol/constants.hpp"

namespace spherepol {

namespace {
constexpr double kPhaseSignalTol = 1e-9;  // relative to s0

double intensity(const std::complex<double>& amplitude) {
  return std::norm(amplitude) / (2.0 * kVacuumImpedance);
}
}  // namespace

double StokesVector::degree_of_polarization() const {
  if (!(s0 > 0.0)) {
    throw std::domain_error("degree_of_polarization: s0 must be positive");
  }
  return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3) / s0;
}

JonesField apply_cavity(const JonesField& in, const CavityParams& params, double detuning_hz) {
  const ComplexTransmission tr = transmission(params, detuning_hz);
  const double t_axis = std::sqrt(params.t_all);
  JonesField out = in;
  out.a_x = in.a_x * t_axis * std::sqrt(tr.transmittance) *
            std::polar(1.0, tr.phase_rad);
  out.a_y = in.a_y * t_axis;
  return out;
}

StokesVector stokes_from_field(const JonesField& field) {
  const std::complex<double>& u = field.a_x;
  const std::complex<double>& v = field.a_y;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double i_x = intensity(u);
  const double i_y = intensity(v);
  const double i_p = intensity((u + v) * inv_sqrt2);
  const double i_m = intensity((u - v) * inv_sqrt2);
  const double i_r = intensity((u - std::complex<double>(0.0, 1.0) * v) * inv_sqrt2);
  const double i_l = intensity((u + std::complex<double>(0.0, 1.0) * v) * inv_sqrt2);
  StokesVector s;
  s.s0 = i_x + i_y;
  s.s1 = i_x - i_y;
  s.s2 = i_p - i_m;
  s.s3 = i_r - i_l;
  return s;
}

CountsStokes stokes_from_counts(const ProjectionCounts& counts, double dark_rate_hz) {
  if (!(counts.exposure_s > 0.0)) {
    throw std::invalid_argument("stokes_from_counts: exposure must be positive");
  }
  if (!(dark_rate_hz >= 0.0)) {
    throw std::invalid_argument("stokes_from_counts: dark rate must be non-negative");
  }
  const double dark = dark_rate_hz * counts.exposure_s;
  CountsStokes out;
  auto subtract = [&](double raw) {
    const double net = raw - dark;
    if (net < 0.0) {
      out.low_signal = true;
      return 0.0;
    }
    return net;
  };
  const double x = subtract(counts.x);
  const double y = subtract(counts.y);
  const double p = subtract(counts.p);
  const double m = subtract(counts.m);
  const double r = subtract(counts.r);
  const double l = subtract(counts.l);
  out.stokes.s0 = x + y;
  out.stokes.s1 = x - y;
  out.stokes.s2 = p - m;
  out.stokes.s3 = r - l;
  if (!(out.stokes.s0 > 0.0)) out.low_signal = true;
  return out;
}

double extract_phase(const StokesVector& s, double arg_a0x_rad, double arg_a0y_rad,
                     double theta_offset_rad) {
  if (!(s.s0 > 0.0)) {
    throw std::domain_error("extract_phase: s0 must be positive");
  }
  const double equatorial = std::sqrt(s.s2 * s.s2 + s.s3 * s.s3);
  if (equatorial < kPhaseSignalTol * s.s0) {
    throw IndeterminatePhaseError(
        "extract_phase: s2 and s3 both vanish; phase is undefined");
  }
  const double measured = std::atan2(-s.s3, s.s2);
  return wrap_pi(measured - arg_a0x_rad + arg_a0y_rad - theta_offset_rad);
}

}  // namespace spherepol
