#include "spherepol/photon_sim.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "spherepol/constants.hpp"
#include "spherepol/random.hpp"

namespace spherepol {

namespace {

// Stream tags keep the Poisson and jitter draws on disjoint substreams.
constexpr std::uint64_t kStreamCounts = 0;
constexpr std::uint64_t kStreamJitter = 1;

std::array<double, kNumBases> fractions_of(const std::complex<double>& u,
                                           const std::complex<double>& v) {
  const std::complex<double> i1(0.0, 1.0);
  std::array<double, kNumBases> f{};
  f[kBasisX] = std::norm(u);
  f[kBasisY] = std::norm(v);
  f[kBasisP] = 0.5 * std::norm(u + v);
  f[kBasisM] = 0.5 * std::norm(u - v);
  f[kBasisR] = 0.5 * std::norm(u - i1 * v);
  f[kBasisL] = 0.5 * std::norm(u + i1 * v);
  return f;
}

}  // namespace

void ProbeModel::validate() const {
  if (!(power_w >= 0.0)) {
    throw std::invalid_argument("probe: power_w must be non-negative");
  }
  if (!(wavelength_m > 0.0)) {
    throw std::invalid_argument("probe: wavelength_m must be positive");
  }
  if (!(pol_angle_deg >= 0.0 && pol_angle_deg <= 90.0)) {
    throw std::invalid_argument("probe: pol_angle_deg must be in [0, 90]");
  }
  if (!(pol_phase_rad > -kPi && pol_phase_rad <= kPi)) {
    throw std::invalid_argument("probe: pol_phase_rad must be in (-pi, pi]");
  }
}

void DetectorModel::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("detector: efficiency must be in (0, 1]");
  }
  if (!(dark_rate_hz >= 0.0)) {
    throw std::invalid_argument("detector: dark_rate_hz must be non-negative");
  }
  if (!(bin_time_s > 0.0)) {
    throw std::invalid_argument("detector: bin_time_s must be positive");
  }
  if (!(count_cap > 0.0)) {
    throw std::invalid_argument("detector: count_cap must be positive");
  }
}

void SimOptions::validate() const {
  if (!(depol_strength >= 0.0 && depol_strength <= 1.0)) {
    throw std::invalid_argument("sim: depol_strength must be in [0, 1]");
  }
  if (!(jitter_hz >= 0.0)) {
    throw std::invalid_argument("sim: jitter_hz must be non-negative");
  }
}

ProjectionCounts SweepRecord::point_counts(std::size_t index) const {
  if (index >= counts.size()) {
    throw std::out_of_range("SweepRecord: point index out of range");
  }
  ProjectionCounts pc;
  pc.x = static_cast<double>(counts[index][kBasisX]);
  pc.y = static_cast<double>(counts[index][kBasisY]);
  pc.p = static_cast<double>(counts[index][kBasisP]);
  pc.m = static_cast<double>(counts[index][kBasisM]);
  pc.r = static_cast<double>(counts[index][kBasisR]);
  pc.l = static_cast<double>(counts[index][kBasisL]);
  pc.exposure_s = meta.detector.bin_time_s;
  return pc;
}

double photon_rate_hz(double power_w, double wavelength_m) {
  if (!(power_w >= 0.0) || !(wavelength_m > 0.0)) {
    throw std::invalid_argument("photon_rate_hz: power must be >= 0 and wavelength > 0");
  }
  return power_w * wavelength_m / (kPlanck * kSpeedOfLight);
}

double mean_photons(double power_w, double wavelength_m, double window_s) {
  if (!(window_s > 0.0)) {
    throw std::invalid_argument("mean_photons: window must be positive");
  }
  return photon_rate_hz(power_w, wavelength_m) * window_s;
}

JonesField probe_field(const ProbeModel& probe) {
  probe.validate();
  const double alpha = probe.pol_angle_deg * kPi / 180.0;
  JonesField f;
  f.a_x = std::cos(alpha);
  f.a_y = std::polar(std::sin(alpha), probe.pol_phase_rad);
  f.frequency_hz = kSpeedOfLight / probe.wavelength_m;
  return f;
}

std::array<double, kNumBases> projection_fractions(const CavityParams& params,
                                                   const ProbeModel& probe, double detuning_hz,
                                                   double depol_strength) {
  const JonesField in = probe_field(probe);
  const ComplexTransmission tr = transmission(params, detuning_hz);
  const double t_axis = std::sqrt(params.t_all);
  const std::complex<double> u = in.a_x * t_axis * std::sqrt(tr.transmittance) *
                                 std::polar(1.0, tr.phase_rad + params.theta_offset_rad);
  const std::complex<double> v = in.a_y * t_axis;
  std::array<double, kNumBases> f = fractions_of(u, v);

  if (depol_strength > 0.0) {
    const double contrast = 1.0 - tr.transmittance / analytic_baseline(params);
    const double w = std::min(1.0, std::max(0.0, depol_strength * contrast));
    const double iso = 0.5 * (f[kBasisX] + f[kBasisY]);
    for (int b = kBasisP; b <= kBasisL; ++b) {
      f[b] = (1.0 - w) * f[b] + w * iso;
    }
  }
  return f;
}

std::array<double, kNumBases> expected_rates(const CavityParams& params, const ProbeModel& probe,
                                             const DetectorModel& detector, double detuning_hz,
                                             double depol_strength) {
  params.validate();
  probe.validate();
  detector.validate();
  const double rate_in = photon_rate_hz(probe.power_w, probe.wavelength_m);
  const std::array<double, kNumBases> f =
      projection_fractions(params, probe, detuning_hz, depol_strength);
  std::array<double, kNumBases> rates{};
  for (int b = 0; b < kNumBases; ++b) {
    rates[b] = detector.efficiency * rate_in * f[b] + detector.dark_rate_hz;
  }
  return rates;
}

SweepRecord simulate_sweep(const CavityParams& params, const ProbeModel& probe,
                           const DetectorModel& detector, std::span<const double> detunings_hz,
                           const SimOptions& options) {
  params.validate();
  probe.validate();
  detector.validate();
  options.validate();
  if (detunings_hz.empty()) {
    throw std::invalid_argument("simulate_sweep: detuning grid is empty");
  }

  SweepRecord record;
  record.detunings_hz.assign(detunings_hz.begin(), detunings_hz.end());
  record.counts.resize(detunings_hz.size());
  record.meta.params = params;
  record.meta.probe = probe;
  record.meta.detector = detector;
  record.meta.options = options;

  const double rate_in = photon_rate_hz(probe.power_w, probe.wavelength_m);
  const std::uint64_t mode_tag = options.mode == CountingMode::Sequential ? 0 : 1;

  for (std::size_t i = 0; i < detunings_hz.size(); ++i) {
    // Sequential pairs see three distinct windows, so jitter is drawn per
    // pair; simultaneous counting shares a single window.
    std::array<double, 3> window_detuning{};
    for (int w = 0; w < 3; ++w) {
      double df = detunings_hz[i];
      if (options.jitter_hz > 0.0) {
        const std::uint64_t jitter_window = options.mode == CountingMode::Sequential ? w : 0;
        CounterRng jitter_rng(derive_stream(options.seed, kStreamJitter, i, jitter_window));
        df += options.jitter_hz * jitter_rng.gaussian();
      }
      window_detuning[w] = df;
      if (options.mode == CountingMode::Simultaneous) {
        window_detuning[1] = window_detuning[0];
        window_detuning[2] = window_detuning[0];
        break;
      }
    }

    std::array<std::array<double, kNumBases>, 3> window_fractions{};
    for (int w = 0; w < 3; ++w) {
      window_fractions[w] = projection_fractions(params, probe, window_detuning[w],
                                                 options.depol_strength);
    }

    for (int b = 0; b < kNumBases; ++b) {
      const double mean =
          detector.efficiency * rate_in * window_fractions[b / 2][b] * detector.bin_time_s +
          detector.dark_rate_hz * detector.bin_time_s;
      if (mean > detector.count_cap) {
        throw CountOverflowError("simulate_sweep: expected " + std::to_string(mean) +
                                 " counts in one bin at point " + std::to_string(i) +
                                 " exceeds the cap of " + std::to_string(detector.count_cap));
      }
      CounterRng rng(derive_stream(options.seed, kStreamCounts,
                                   (i << 4) | static_cast<std::uint64_t>(b), mode_tag));
      record.counts[i][b] = rng.poisson(mean);
    }
  }
  return record;
}

std::vector<double> detuning_grid(double center_hz, double span_hz, int points) {
  if (points < 2) {
    throw std::invalid_argument("detuning_grid: need at least 2 points");
  }
  if (!(span_hz > 0.0)) {
    throw std::invalid_argument("detuning_grid: span must be positive");
  }
  std::vector<double> grid(points);
  const double start = center_hz - 0.5 * span_hz;
  const double step = span_hz / (points - 1);
  for (int i = 0; i < points; ++i) grid[i] = start + i * step;
  return grid;
}

SweepRecord compensate_transmittance(const SweepRecord& record, double t_all) {
  if (!(t_all > 0.0 && t_all <= 1.0)) {
    throw std::invalid_argument("compensate_transmittance: t_all must be in (0, 1]");
  }
  if (record.counts.size() != record.detunings_hz.size()) {
    throw std::invalid_argument("compensate_transmittance: malformed record");
  }
  const ProbeModel& probe = record.meta.probe;
  const DetectorModel& det = record.meta.detector;
  probe.validate();
  det.validate();

  const JonesField in = probe_field(probe);
  const std::array<double, kNumBases> f_in = fractions_of(in.a_x, in.a_y);
  const double rate_in = photon_rate_hz(probe.power_w, probe.wavelength_m);
  const double dark = det.dark_rate_hz * det.bin_time_s;

  SweepRecord out = record;
  out.normalized.assign(record.counts.size(), {});
  for (std::size_t i = 0; i < record.counts.size(); ++i) {
    for (int b = 0; b < kNumBases; ++b) {
      const double denom = det.efficiency * rate_in * f_in[b] * det.bin_time_s * t_all;
      if (denom < 1e-12) {
        out.normalized[i][b] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      out.normalized[i][b] = (static_cast<double>(record.counts[i][b]) - dark) / denom;
    }
  }
  out.meta.compensated = true;
  return out;
}

}  // namespace spherepol
