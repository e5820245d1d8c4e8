#include "spherepol/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spherepol/nelder_mead.hpp"
#include "spherepol/random.hpp"

namespace spherepol {

namespace {

constexpr double kLogFloor = 1e-300;

struct PairCounts {
  double plus = 0.0;   // projection along the pair axis
  double minus = 0.0;  // orthogonal projection
};

// Expected Poisson means for one pair window.
inline void pair_means(double flux, double prob_plus, double dark, double& lam_plus,
                       double& lam_minus) {
  lam_plus = flux * prob_plus + dark;
  lam_minus = flux * (1.0 - prob_plus) + dark;
}

inline double poisson_term(double k, double lam) {
  lam = std::max(lam, kLogFloor);
  return k * std::log(lam) - lam;
}

DensityMatrix rho_from_cholesky(double g0, double g1, double g2, double g3) {
  // G = [[g0, 0], [g2 + i g3, g1]]; rho = G^dag G / Tr(G^dag G).
  const double c2 = g2 * g2 + g3 * g3;
  const double norm = g0 * g0 + g1 * g1 + c2;
  DensityMatrix rho;
  if (norm <= 0.0) {
    rho.rho00 = 0.5;
    rho.rho11 = 0.5;
    return rho;
  }
  rho.rho00 = (g0 * g0 + c2) / norm;
  rho.rho11 = (g1 * g1) / norm;
  rho.rho01 = std::complex<double>(g2, -g3) * g1 / norm;
  rho.rho10 = std::conj(rho.rho01);
  return rho;
}

}  // namespace

std::array<double, 3> DensityMatrix::bloch() const {
  return {std::real(rho00 - rho11), 2.0 * std::real(rho01), 2.0 * std::imag(rho01)};
}

std::array<double, 2> DensityMatrix::eigenvalues() const {
  const double mean = 0.5 * std::real(rho00 + rho11);
  const double half_diff = 0.5 * std::real(rho00 - rho11);
  const double radius = std::sqrt(half_diff * half_diff + std::norm(rho01));
  return {mean + radius, mean - radius};
}

bool DensityMatrix::is_physical(double tol) const {
  if (std::abs(std::imag(rho00)) > tol || std::abs(std::imag(rho11)) > tol) return false;
  if (std::abs(rho10 - std::conj(rho01)) > tol) return false;
  if (std::abs(std::real(rho00 + rho11) - 1.0) > tol) return false;
  const auto ev = eigenvalues();
  return ev[1] >= -tol;
}

DensityMatrix DensityMatrix::from_bloch(double n1, double n2, double n3) {
  DensityMatrix rho;
  rho.rho00 = 0.5 * (1.0 + n1);
  rho.rho11 = 0.5 * (1.0 - n1);
  rho.rho01 = std::complex<double>(0.5 * n2, 0.5 * n3);
  rho.rho10 = std::conj(rho.rho01);
  return rho;
}

DensityMatrix rho_from_stokes(const StokesVector& s) {
  if (!(s.s0 > 0.0)) {
    throw std::domain_error("rho_from_stokes: s0 must be positive");
  }
  double n1 = s.s1 / s.s0;
  double n2 = s.s2 / s.s0;
  double n3 = s.s3 / s.s0;
  const double r = std::sqrt(n1 * n1 + n2 * n2 + n3 * n3);
  if (r > 1.0) {
    n1 /= r;
    n2 /= r;
    n3 /= r;
  }
  return DensityMatrix::from_bloch(n1, n2, n3);
}

double purity(const DensityMatrix& rho) {
  const double d0 = std::real(rho.rho00);
  const double d1 = std::real(rho.rho11);
  return d0 * d0 + d1 * d1 + 2.0 * std::norm(rho.rho01);
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  // Two-level identity: F = Tr(a b) + 2 sqrt(det a det b).
  const double tr_ab = std::real(a.rho00 * b.rho00 + a.rho01 * b.rho10 + a.rho10 * b.rho01 +
                                 a.rho11 * b.rho11);
  const double det_a = std::real(a.rho00 * a.rho11 - a.rho01 * a.rho10);
  const double det_b = std::real(b.rho00 * b.rho11 - b.rho01 * b.rho10);
  const double cross = std::max(0.0, det_a) * std::max(0.0, det_b);
  return std::clamp(tr_ab + 2.0 * std::sqrt(cross), 0.0, 1.0);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const double d00 = std::real(a.rho00 - b.rho00);
  const double d11 = std::real(a.rho11 - b.rho11);
  const std::complex<double> d01 = a.rho01 - b.rho01;
  const double mean = 0.5 * (d00 + d11);
  const double radius = std::sqrt(0.25 * (d00 - d11) * (d00 - d11) + std::norm(d01));
  return 0.5 * (std::abs(mean + radius) + std::abs(mean - radius));
}

DensityMatrix linear_inversion(const ProjectionCounts& counts, double dark_rate_hz) {
  const CountsStokes cs = stokes_from_counts(counts, dark_rate_hz);
  if (!(cs.stokes.s0 > 0.0)) {
    throw std::domain_error("linear_inversion: no signal counts after dark subtraction");
  }
  return rho_from_stokes(cs.stokes);
}

MleResult mle_reconstruct(const ProjectionCounts& counts, const MleConfig& config) {
  if (!(counts.exposure_s > 0.0)) {
    throw std::invalid_argument("mle_reconstruct: exposure must be positive");
  }
  if (!(config.dark_rate_hz >= 0.0)) {
    throw std::invalid_argument("mle_reconstruct: dark rate must be non-negative");
  }
  const std::array<PairCounts, 3> pairs = {
      PairCounts{counts.x, counts.y},
      PairCounts{counts.p, counts.m},
      PairCounts{counts.r, counts.l},
  };
  double total = 0.0;
  for (const auto& pc : pairs) {
    if (pc.plus < 0.0 || pc.minus < 0.0) {
      throw std::invalid_argument("mle_reconstruct: counts must be non-negative");
    }
    total += pc.plus + pc.minus;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("mle_reconstruct: total counts must be positive");
  }

  const double dark = config.dark_rate_hz * counts.exposure_s;
  const bool sequential = config.mode == CountingMode::Sequential;
  const int n_flux = sequential ? 3 : 1;

  // g0..g3 parameterize the state; the remaining entries are pair fluxes.
  std::vector<double> lower(4 + n_flux, -1.0);
  std::vector<double> upper(4 + n_flux, 1.0);
  for (int j = 0; j < n_flux; ++j) {
    double pair_total = 0.0;
    if (sequential) {
      pair_total = pairs[j].plus + pairs[j].minus;
    } else {
      pair_total = total / 3.0;
    }
    lower[4 + j] = 0.0;
    upper[4 + j] = 3.0 * std::max(pair_total, 10.0);
  }

  const auto neg_log_likelihood = [&](std::span<const double> v) {
    const DensityMatrix rho = rho_from_cholesky(v[0], v[1], v[2], v[3]);
    const auto n = rho.bloch();
    const std::array<double, 3> prob_plus = {0.5 * (1.0 + n[0]), 0.5 * (1.0 + n[1]),
                                             0.5 * (1.0 + n[2])};
    double ll = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double flux = v[4 + (sequential ? j : 0)];
      if (flux < 0.0) return 1e300;
      double lam_p = 0.0, lam_m = 0.0;
      pair_means(flux, prob_plus[j], dark, lam_p, lam_m);
      ll += poisson_term(pairs[j].plus, lam_p) + poisson_term(pairs[j].minus, lam_m);
    }
    return -ll;
  };

  // The linear-inversion state (exact on noiseless counts) seeds the
  // population; DE handles the global search around it.
  std::vector<std::vector<double>> seeds;
  try {
    const DensityMatrix li = linear_inversion(counts, config.dark_rate_hz);
    std::vector<double> guess(4 + n_flux);
    const double g1 = std::sqrt(std::max(std::real(li.rho11), 0.0));
    const std::complex<double> c = g1 > 1e-12 ? std::conj(li.rho01) / g1
                                              : std::complex<double>(0.0, 0.0);
    guess[0] = std::sqrt(std::max(std::real(li.rho00) - std::norm(c), 0.0));
    guess[1] = g1;
    guess[2] = c.real();
    guess[3] = c.imag();
    for (int j = 0; j < n_flux; ++j) {
      const double pair_total =
          sequential ? pairs[j].plus + pairs[j].minus : total / 3.0;
      guess[4 + j] = std::max(pair_total - 2.0 * dark, 0.0);
    }
    seeds.push_back(std::move(guess));
  } catch (const std::domain_error&) {
    // dark-dominated counts: fall back to a fully random population
  }

  const DeResult de = differential_evolution(neg_log_likelihood, lower, upper, config.de, seeds);

  // Simplex polish: DE stalls at its tolerance well above machine precision.
  std::vector<double> step(4 + n_flux, 0.02);
  for (int j = 0; j < n_flux; ++j) {
    step[4 + j] = std::max(0.01 * de.x[4 + j], 1.0);
  }
  NmOptions nm;
  nm.max_iterations = 4000;
  nm.f_tol = 1e-15;
  nm.x_tol = 1e-12;
  const NmResult polish = nelder_mead(neg_log_likelihood, de.x, step, nm);
  const bool polished = polish.fval < de.fval;
  const std::vector<double>& best = polished ? polish.x : de.x;

  MleResult out;
  out.rho = rho_from_cholesky(best[0], best[1], best[2], best[3]);
  out.log_likelihood = -(polished ? polish.fval : de.fval);
  out.generations = de.generations;
  out.converged = de.converged;
  for (int j = 0; j < 3; ++j) {
    out.flux[j] = std::abs(best[4 + (sequential ? j : 0)]);
  }
  return out;
}

std::vector<PurityPoint> purity_spectrum(const SweepRecord& record, const MleConfig& config) {
  if (record.counts.size() != record.detunings_hz.size()) {
    throw std::invalid_argument("purity_spectrum: malformed record");
  }
  std::vector<PurityPoint> out;
  out.reserve(record.counts.size());
  for (std::size_t i = 0; i < record.counts.size(); ++i) {
    PurityPoint pt;
    pt.detuning_hz = record.detunings_hz[i];
    const ProjectionCounts pc = record.point_counts(i);
    const CountsStokes cs = stokes_from_counts(pc, config.dark_rate_hz);
    if (!(cs.stokes.s0 > 0.0)) {
      pt.low_signal = true;
      pt.purity = std::numeric_limits<double>::quiet_NaN();
      out.push_back(pt);
      continue;
    }
    pt.low_signal = cs.low_signal;
    MleConfig point_config = config;
    point_config.de.seed = derive_stream(config.de.seed, 0x6d6c65u, i);  // "mle"
    const MleResult mle = mle_reconstruct(pc, point_config);
    pt.rho = mle.rho;
    pt.bloch = mle.rho.bloch();
    pt.purity = purity(mle.rho);
    pt.converged = mle.converged;
    out.push_back(pt);
  }
  return out;
}

WindowStats windowed_purity(std::span<const PurityPoint> points, double abs_min_hz,
                            double abs_max_hz) {
  if (!(abs_min_hz >= 0.0) || !(abs_max_hz > abs_min_hz)) {
    throw std::invalid_argument("windowed_purity: need 0 <= abs_min < abs_max");
  }
  WindowStats stats;
  double sum = 0.0;
  for (const auto& pt : points) {
    const double ad = std::abs(pt.detuning_hz);
    if (ad < abs_min_hz || ad > abs_max_hz) continue;
    if (pt.low_signal || !pt.converged) continue;
    sum += pt.purity;
    ++stats.count;
  }
  if (stats.count == 0) {
    throw std::invalid_argument("windowed_purity: no usable points in the window");
  }
  stats.mean = sum / stats.count;
  double ss = 0.0;
  for (const auto& pt : points) {
    const double ad = std::abs(pt.detuning_hz);
    if (ad < abs_min_hz || ad > abs_max_hz) continue;
    if (pt.low_signal || !pt.converged) continue;
    ss += (pt.purity - stats.mean) * (pt.purity - stats.mean);
  }
  stats.stddev = stats.count > 1 ? std::sqrt(ss / (stats.count - 1)) : 0.0;
  return stats;
}

}  // namespace spherepol
