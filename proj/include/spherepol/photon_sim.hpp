#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "spherepol/polarization.hpp"

namespace spherepol {

// Basis order used for all six-channel arrays.
enum Basis : int { kBasisX = 0, kBasisY, kBasisP, kBasisM, kBasisR, kBasisL };
inline constexpr int kNumBases = 6;
inline constexpr const char* kBasisNames[kNumBases] = {"x", "y", "p", "m", "r", "l"};

struct ProbeModel {
  double power_w = 0.0;
  double wavelength_m = 0.0;
  double pol_angle_deg = 45.0;  // 45 deg balances the cavity and reference axes
  double pol_phase_rad = 0.0;   // relative phase of the y component

  void validate() const;
};

struct DetectorModel {
  double efficiency = 1.0;     // overall detection efficiency
  double dark_rate_hz = 0.0;   // per counter
  double bin_time_s = 0.0;     // one counting window
  double count_cap = 1e9;      // per-bin expectation limit

  void validate() const;
};

// Sequential: the three projection pairs are counted in consecutive windows.
// Simultaneous: all six projections are counted in parallel.
enum class CountingMode { Sequential, Simultaneous };

struct SimOptions {
  CountingMode mode = CountingMode::Sequential;
  std::uint64_t seed = 0;
  // Mixes the coherent projections toward unpolarized light near resonance,
  // with weight depol_strength * (1 - T/baseline).
  double depol_strength = 0.0;
  // Gaussian rms frequency jitter applied per counting window.
  double jitter_hz = 0.0;

  void validate() const;
};

struct SweepMeta {
  CavityParams params;
  ProbeModel probe;
  DetectorModel detector;
  SimOptions options;
  bool compensated = false;
};

struct SweepRecord {
  std::vector<double> detunings_hz;
  std::vector<std::array<std::int64_t, kNumBases>> counts;
  // Dark-subtracted, input- and taper-normalized spectra; filled by
  // compensate_transmittance, NaN where the input projection is empty.
  std::vector<std::array<double, kNumBases>> normalized;
  SweepMeta meta;

  ProjectionCounts point_counts(std::size_t index) const;
};

class CountOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Photon flux of a monochromatic beam, photons per second.
double photon_rate_hz(double power_w, double wavelength_m);

// Mean photon number inside a time window.
double mean_photons(double power_w, double wavelength_m, double window_s);

// Unit-power Jones vector of the probe.
JonesField probe_field(const ProbeModel& probe);

// Fraction of the input power ending up in each projection after the cavity,
// including the taper transmittance and the birefringence offset.
std::array<double, kNumBases> projection_fractions(const CavityParams& params,
                                                   const ProbeModel& probe, double detuning_hz,
                                                   double depol_strength = 0.0);

// Expected count rate per basis, Hz, dark counts included.
std::array<double, kNumBases> expected_rates(const CavityParams& params, const ProbeModel& probe,
                                             const DetectorModel& detector, double detuning_hz,
                                             double depol_strength = 0.0);

// Monte Carlo sweep over the given detunings; counts are Poisson draws from
// the expected per-window means.  Fully deterministic for a fixed seed.
SweepRecord simulate_sweep(const CavityParams& params, const ProbeModel& probe,
                           const DetectorModel& detector, std::span<const double> detunings_hz,
                           const SimOptions& options);

// Evenly spaced detuning grid covering [center - span/2, center + span/2].
std::vector<double> detuning_grid(double center_hz, double span_hz, int points);

// Fills record.normalized with dark-subtracted counts rescaled by the input
// projection flux and the taper transmittance; raw counts are kept.
SweepRecord compensate_transmittance(const SweepRecord& record, double t_all);

}  // namespace spherepol
