#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "spherepol/diff_evolution.hpp"
#include "spherepol/photon_sim.hpp"
#include "spherepol/polarization.hpp"

namespace spherepol {

// Single-qubit polarization density matrix in the x/y basis.
struct DensityMatrix {
  std::complex<double> rho00{0.0, 0.0};
  std::complex<double> rho01{0.0, 0.0};
  std::complex<double> rho10{0.0, 0.0};
  std::complex<double> rho11{0.0, 0.0};

  // Bloch components (n1, n2, n3) = (rho00-rho11, 2 Re rho01, 2 Im rho01).
  std::array<double, 3> bloch() const;
  std::array<double, 2> eigenvalues() const;  // descending
  bool is_physical(double tol = 1e-9) const;

  static DensityMatrix from_bloch(double n1, double n2, double n3);
};

// Normalized-Stokes construction of the state; Bloch vectors longer than one
// (possible with noisy counts) are scaled back to the sphere surface.
DensityMatrix rho_from_stokes(const StokesVector& s);

double purity(const DensityMatrix& rho);
double fidelity(const DensityMatrix& a, const DensityMatrix& b);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Direct inversion of the three measured Stokes ratios (dark-subtracted),
// projected onto the physical set.
DensityMatrix linear_inversion(const ProjectionCounts& counts, double dark_rate_hz);

struct MleConfig {
  DeOptions de;  // protocol defaults: F=1.5, CR=0.9, NP=32, 500 generations
  CountingMode mode = CountingMode::Sequential;
  double dark_rate_hz = 0.0;
};

struct MleResult {
  DensityMatrix rho;
  double log_likelihood = 0.0;
  // Fitted signal counts per pair window (X/Y, P/M, R/L); identical entries
  // in simultaneous mode.
  std::array<double, 3> flux{};
  int generations = 0;
  bool converged = false;
};

// Maximum-likelihood state reconstruction from one point's six projection
// counts.  The candidate state is parameterized through a Cholesky factor so
// every trial is physical; pair fluxes are nuisance parameters fitted
// alongside.  Poisson likelihood, maximized with differential evolution.
MleResult mle_reconstruct(const ProjectionCounts& counts, const MleConfig& config);

struct PurityPoint {
  double detuning_hz = 0.0;
  double purity = 0.0;
  std::array<double, 3> bloch{};
  DensityMatrix rho;
  bool low_signal = false;
  bool converged = false;
};

// Per-point reconstruction across a sweep record; points whose counts are
// dark-dominated are flagged and skipped.  Each point gets its own derived
// seed, so results do not depend on which points are evaluated.
std::vector<PurityPoint> purity_spectrum(const SweepRecord& record, const MleConfig& config);

struct WindowStats {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

// Mean and sample standard deviation of purity over |detuning| in
// [abs_min_hz, abs_max_hz], ignoring flagged points.
WindowStats windowed_purity(std::span<const PurityPoint> points, double abs_min_hz,
                            double abs_max_hz);

}  // namespace spherepol
