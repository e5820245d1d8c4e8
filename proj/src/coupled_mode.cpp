#include "spherepol/coupled_mode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spherepol/constants.hpp"

namespace spherepol {

double CavityParams::x() const { return std::sqrt(1.0 - gamma) * std::exp(-rho_l); }

double CavityParams::y() const { return std::cos(kappa); }

void CavityParams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("cavity: gamma must be in [0, 1)");
  }
  if (!(rho_l > 0.0)) {
    throw std::invalid_argument("cavity: rho_l must be positive");
  }
  if (!(kappa > 0.0 && kappa <= kPi / 2.0)) {
    throw std::invalid_argument("cavity: kappa must be in (0, pi/2]");
  }
  if (!(fsr_hz > 0.0)) {
    throw std::invalid_argument("cavity: fsr_hz must be positive");
  }
  if (!(f_res_hz > 0.0)) {
    throw std::invalid_argument("cavity: f_res_hz must be positive");
  }
  if (!(t_all > 0.0 && t_all <= 1.0)) {
    throw std::invalid_argument("cavity: t_all must be in (0, 1]");
  }
  if (!(theta_offset_rad > -kPi && theta_offset_rad <= kPi)) {
    throw std::invalid_argument("cavity: theta_offset_rad must be in (-pi, pi]");
  }
}

double GapCouplingLaw::kappa_at(double gap_nm) const {
  return kappa_0 * std::exp(-gap_nm / decay_len_nm);
}

void GapCouplingLaw::validate() const {
  if (!(kappa_0 > 0.0 && kappa_0 <= kPi / 2.0)) {
    throw std::invalid_argument("gap law: kappa_0 must be in (0, pi/2]");
  }
  if (!(decay_len_nm > 0.0)) {
    throw std::invalid_argument("gap law: decay_len_nm must be positive");
  }
}

double wrap_pi(double angle_rad) {
  double a = std::fmod(angle_rad + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

ComplexTransmission transmission(const CavityParams& params, double detuning_hz) {
  const double x = params.x();
  const double y = params.y();
  const double phi = 2.0 * kPi * detuning_hz / params.fsr_hz;
  const std::complex<double> loop = std::polar(1.0, -phi);
  const std::complex<double> denom = 1.0 - x * y * loop;
  if (std::abs(denom) < kSingularityTol) {
    throw std::domain_error("transmission: response is singular (x*y -> 1 on resonance)");
  }
  const std::complex<double> ratio =
      std::sqrt(1.0 - params.gamma) * (y - x * loop) / denom;

  // The measurable cavity phase is zero on resonance in both coupling
  // regimes; past critical coupling the resonant amplitude changes sign, so
  // the raw argument carries an extra pi that is moved into the branch choice
  // here.  This keeps the phase an odd function of detuning that tends to 0
  // (undercoupled) or +-pi (overcoupled) far from resonance.
  double phase = -std::arg(ratio);
  if (y < x - kCriticalTol) phase += kPi;

  ComplexTransmission out;
  out.amplitude_ratio = ratio;
  out.transmittance = std::norm(ratio);
  out.phase_rad = wrap_pi(phase);
  return out;
}

std::vector<ComplexTransmission> transmission_spectrum(const CavityParams& params,
                                                       std::span<const double> detunings_hz) {
  std::vector<ComplexTransmission> out;
  out.reserve(detunings_hz.size());
  for (double df : detunings_hz) out.push_back(transmission(params, df));
  return out;
}

CouplingRegime coupling_regime(const CavityParams& params) {
  const double x = params.x();
  const double y = params.y();
  if (std::abs(y - x) <= kCriticalTol) return CouplingRegime::Critical;
  return y > x ? CouplingRegime::Undercoupled : CouplingRegime::Overcoupled;
}

double analytic_t_min(const CavityParams& params) {
  const double x = params.x();
  const double y = params.y();
  const double num = y - x;
  const double den = 1.0 - x * y;
  return (1.0 - params.gamma) * (num * num) / (den * den);
}

double analytic_baseline(const CavityParams& params) {
  // Far from resonance sin^2(phi/2) dominates and |ratio|^2 -> 1 - gamma.
  return 1.0 - params.gamma;
}

double analytic_fwhm_hz(const CavityParams& params) {
  const double x = params.x();
  const double y = params.y();
  const double arg = (1.0 - x * y) / (2.0 * std::sqrt(x * y));
  if (!(arg < 1.0)) {
    throw std::domain_error("analytic_fwhm_hz: line is broader than one free spectral range");
  }
  const double phi_half = 2.0 * std::asin(arg);
  return params.fsr_hz * phi_half / kPi;
}

double fwhm_hz(std::span<const SpectrumPoint> spectrum) {
  if (spectrum.size() < 5) {
    throw std::invalid_argument("fwhm_hz: need at least 5 spectrum points");
  }
  for (std::size_t i = 1; i < spectrum.size(); ++i) {
    if (!(spectrum[i].detuning_hz > spectrum[i - 1].detuning_hz)) {
      throw std::invalid_argument("fwhm_hz: detunings must be strictly increasing");
    }
  }

  const double baseline = 0.5 * (spectrum.front().value + spectrum.back().value);
  double v_min = spectrum.front().value;
  for (const auto& p : spectrum) v_min = std::min(v_min, p.value);
  const double depth = baseline - v_min;
  if (!(depth > 1e-9) || !(depth > 1e-6 * std::abs(baseline))) {
    throw NoDipError("fwhm_hz: no dip below the edge baseline");
  }

  const double half = baseline - 0.5 * depth;
  std::vector<double> crossings;
  for (std::size_t i = 1; i < spectrum.size(); ++i) {
    const double a = spectrum[i - 1].value - half;
    const double b = spectrum[i].value - half;
    if (a == 0.0) continue;  // counted via the segment ending here
    if ((a > 0.0) != (b > 0.0) || b == 0.0) {
      const double t = a / (a - b);
      crossings.push_back(spectrum[i - 1].detuning_hz +
                          t * (spectrum[i].detuning_hz - spectrum[i - 1].detuning_hz));
    }
  }
  if (crossings.size() < 2) {
    throw AmbiguousDipError("fwhm_hz: dip is not fully resolved inside the scan");
  }
  if (crossings.size() > 2) {
    throw AmbiguousDipError("fwhm_hz: found " + std::to_string(crossings.size()) +
                            " half-depth crossings; more than one dip candidate");
  }
  return crossings[1] - crossings[0];
}

double quality_factor(double f_res_hz, double fwhm_hz, bool two_pi_convention) {
  if (!(f_res_hz > 0.0) || !(fwhm_hz > 0.0)) {
    throw std::domain_error("quality_factor: frequency and width must be positive");
  }
  const double q = f_res_hz / fwhm_hz;
  return two_pi_convention ? 2.0 * kPi * q : q;
}

CavityParams params_at_gap(const CavityParams& base, const GapCouplingLaw& law, double gap_nm) {
  law.validate();
  if (!(gap_nm >= 0.0)) {
    throw std::invalid_argument("params_at_gap: gap must be non-negative");
  }
  CavityParams out = base;
  out.kappa = law.kappa_at(gap_nm);
  return out;
}

double critical_gap_nm(const CavityParams& base, const GapCouplingLaw& law) {
  law.validate();
  const double kappa_crit = std::acos(base.x());
  if (!(kappa_crit > 0.0)) {
    throw std::domain_error("critical_gap_nm: lossless cavity has no critical point");
  }
  return law.decay_len_nm * std::log(law.kappa_0 / kappa_crit);
}

std::vector<double> unwrap_phase(std::span<const double> wrapped_rad) {
  std::vector<double> out(wrapped_rad.begin(), wrapped_rad.end());
  double offset = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double jump = wrapped_rad[i] - wrapped_rad[i - 1];
    if (jump > kPi) {
      offset -= 2.0 * kPi;
    } else if (jump < -kPi) {
      offset += 2.0 * kPi;
    }
    out[i] = wrapped_rad[i] + offset;
  }
  return out;
}

}  // namespace spherepol
