#include "spherepol/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spherepol/constants.hpp"
#include "spherepol/errors.hpp"
#include "spherepol/nelder_mead.hpp"
#include "spherepol/random.hpp"

namespace spherepol {

namespace {

constexpr double kPenalty = 1e50;
constexpr double kMinLog = -40.0;              // lower clamp for log-space coordinates
constexpr double kDegenerateRmsMargin = 0.05;  // mirror fit within 5% -> degenerate
constexpr double kPerfectMs = 1e-18;           // mean-square residual of an exact fit

struct LineShape {
  double gamma = 0.0;
  double rho_l = 0.0;
  double kappa = 0.0;
  double offset_hz = 0.0;
};

// The positive parameters are optimized in log space so the simplex never
// leaves the physical domain.
std::array<double, 4> to_coords(const LineShape& p, double offset_scale) {
  return {std::log(std::max(p.gamma, 1e-15)), std::log(std::max(p.rho_l, 1e-15)),
          std::log(std::max(p.kappa, 1e-15)), p.offset_hz / offset_scale};
}

LineShape from_coords(std::span<const double> u, double offset_scale) {
  LineShape p;
  p.gamma = std::exp(std::max(u[0], kMinLog));
  p.rho_l = std::exp(std::max(u[1], kMinLog));
  p.kappa = std::exp(std::max(u[2], kMinLog));
  p.offset_hz = u[3] * offset_scale;
  return p;
}

bool shape_valid(const LineShape& p) {
  return p.gamma > 0.0 && p.gamma < 1.0 && p.rho_l > 0.0 && p.kappa > 0.0 &&
         p.kappa <= kPi / 2.0;
}

CavityParams shape_params(const LineShape& p, const CavityParams& nominal) {
  CavityParams out = nominal;
  out.gamma = p.gamma;
  out.rho_l = p.rho_l;
  out.kappa = p.kappa;
  return out;
}

struct FitData {
  std::vector<SpectrumPoint> transmittance;
  std::vector<SpectrumPoint> phase;     // empty for amplitude-only fits
  std::vector<double> t_sigma;          // empty -> uniform weights
  std::vector<double> phase_sigma;
  double span_hz = 0.0;
  double phase_weight = 1.0;
};

void fill_residuals(const LineShape& p, const CavityParams& nominal, const FitData& data,
                    std::vector<double>& out, bool weighted = true) {
  out.clear();
  const CavityParams params = shape_params(p, nominal);
  for (std::size_t i = 0; i < data.transmittance.size(); ++i) {
    const auto& pt = data.transmittance[i];
    const ComplexTransmission tr = transmission(params, pt.detuning_hz - p.offset_hz);
    double r = tr.transmittance - pt.value;
    if (weighted && !data.t_sigma.empty()) r /= data.t_sigma[i];
    out.push_back(r);
  }
  const double wp = weighted ? std::sqrt(data.phase_weight) : 1.0;
  for (std::size_t i = 0; i < data.phase.size(); ++i) {
    const auto& pt = data.phase[i];
    const ComplexTransmission tr = transmission(params, pt.detuning_hz - p.offset_hz);
    double r = wrap_pi(tr.phase_rad - pt.value);
    if (weighted && !data.phase_sigma.empty()) r /= data.phase_sigma[i];
    out.push_back(wp * r);
  }
}

double mean_square(const LineShape& p, const CavityParams& nominal, const FitData& data,
                   std::vector<double>& scratch) {
  if (!shape_valid(p)) return kPenalty;
  try {
    fill_residuals(p, nominal, data, scratch);
  } catch (const std::domain_error&) {
    return kPenalty;
  }
  double ss = 0.0;
  for (double r : scratch) ss += r * r;
  return ss / static_cast<double>(scratch.size());
}

// Inverts x and y from the dip depth and width of the line shape; a is the
// baseline-referenced dip amplitude, s the half-width phase sine.
bool solve_xy(double a, double s, bool undercoupled, double& x, double& y) {
  const double q = -s + std::sqrt(s * s + 1.0);
  const double xy = q * q;
  const double diff = (undercoupled ? 1.0 : -1.0) * a * (1.0 - xy);
  // y - x = diff, x*y = xy  =>  y^2 - diff*y - xy = 0 with y > 0.
  const double disc = diff * diff + 4.0 * xy;
  y = 0.5 * (diff + std::sqrt(disc));
  if (!(y > 0.0 && y < 1.0)) return false;
  x = xy / y;
  return x > 0.0 && x < 1.0;
}

std::vector<LineShape> heuristic_seeds(const FitData& data, const CavityParams& nominal) {
  std::vector<LineShape> seeds;
  const auto& ts = data.transmittance;

  double v_min = ts.front().value;
  double d_min = ts.front().detuning_hz;
  for (const auto& pt : ts) {
    if (pt.value < v_min) {
      v_min = pt.value;
      d_min = pt.detuning_hz;
    }
  }
  const double baseline = 0.5 * (ts.front().value + ts.back().value);
  const double gamma_guess = std::clamp(1.0 - baseline, 1e-7, 0.5);

  double width = data.span_hz / 6.0;
  try {
    width = fwhm_hz(ts);
  } catch (const std::exception&) {
    // keep the coarse guess
  }

  const double t0 = std::clamp(v_min / std::max(baseline, 1e-6), 0.0, 1.0);
  const double a = std::sqrt(t0);
  const double s = std::sin(0.5 * kPi * width / nominal.fsr_hz);
  for (bool under : {true, false}) {
    double x = 0.0, y = 0.0;
    if (!solve_xy(a, s, under, x, y)) continue;
    LineShape p;
    p.gamma = gamma_guess;
    const double x_max = std::sqrt(1.0 - p.gamma);
    p.rho_l = x < x_max ? -std::log(x / x_max) : 1e-7;
    p.kappa = std::acos(std::clamp(y, -1.0, 1.0));
    p.offset_hz = d_min;
    if (shape_valid(p)) seeds.push_back(p);
  }
  return seeds;
}

LineShape mirror_shape(const LineShape& p) {
  // Swap the roles of the loss and coupling amplitudes at fixed gamma.
  const double x_max = std::sqrt(1.0 - p.gamma);
  const double x = x_max * std::exp(-p.rho_l);
  const double y = std::cos(p.kappa);
  LineShape m = p;
  m.rho_l = y < x_max ? -std::log(y / x_max) : 1e-7;
  m.kappa = std::acos(std::clamp(x, -1.0, 1.0));
  return m;
}

struct ShapeFit {
  LineShape shape;
  double ms = kPenalty;  // mean squared residual
  bool converged = false;
};

ShapeFit run_nm(const LineShape& seed, const CavityParams& nominal, const FitData& data,
                const FitOptions& options, double offset_scale) {
  std::vector<double> scratch;
  const Objective obj = [&](std::span<const double> u) {
    return mean_square(from_coords(u, offset_scale), nominal, data, scratch);
  };
  NmOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.f_tol = 1e-14;
  nm.x_tol = 1e-9;
  const std::array<double, 4> u0 = to_coords(seed, offset_scale);
  const std::array<double, 4> step = {0.3, 0.3, 0.3, 0.05};
  const NmResult res = nelder_mead(obj, u0, step, nm);
  ShapeFit fit;
  fit.shape = from_coords(res.x, offset_scale);
  fit.ms = res.fval;
  fit.converged = res.converged;
  return fit;
}

ShapeFit run_de_polish(const CavityParams& nominal, const FitData& data,
                       const FitOptions& options, double offset_scale) {
  std::vector<double> scratch;
  const Objective obj = [&](std::span<const double> u) {
    return mean_square(from_coords(u, offset_scale), nominal, data, scratch);
  };
  const std::array<double, 4> lower = {std::log(1e-9), std::log(1e-9), std::log(1e-6), -0.25};
  const std::array<double, 4> upper = {std::log(0.5), std::log(0.5), std::log(kPi / 2.0), 0.25};
  DeOptions de;
  de.scaling_factor = 0.7;
  de.crossover_prob = 0.9;
  de.population = 48;
  de.max_generations = 400;
  de.seed = derive_stream(options.seed, 0x666974u);  // "fit"
  const DeResult global = differential_evolution(obj, lower, upper, de);
  return run_nm(from_coords(global.x, offset_scale), nominal, data, options, offset_scale);
}

std::array<double, 4> shape_stderr(const LineShape& p, const CavityParams& nominal,
                                   const FitData& data) {
  std::vector<double> base, plus, minus;
  fill_residuals(p, nominal, data, base);
  const std::size_t n = base.size();
  constexpr std::size_t kNumParams = 4;
  std::array<double, 4> inf{};
  inf.fill(std::numeric_limits<double>::infinity());
  if (n <= kNumParams) return inf;

  const auto member = [](LineShape& s, std::size_t j) -> double& {
    switch (j) {
      case 0: return s.gamma;
      case 1: return s.rho_l;
      case 2: return s.kappa;
      default: return s.offset_hz;
    }
  };
  const std::array<double, 4> raw = {p.gamma, p.rho_l, p.kappa, p.offset_hz};
  std::vector<std::array<double, 4>> jac(n);
  for (std::size_t j = 0; j < kNumParams; ++j) {
    const double h = j == 3 ? std::max(1e-6 * data.span_hz, 1.0)
                            : std::max(1e-6 * std::abs(raw[j]), 1e-12);
    LineShape pp = p, pm = p;
    member(pp, j) += h;
    member(pm, j) -= h;
    const bool ok_p = shape_valid(pp);
    const bool ok_m = shape_valid(pm);
    if (!ok_p && !ok_m) return inf;
    // One-sided difference when the parameter sits on a validity boundary.
    const std::vector<double>& lo = ok_m ? (fill_residuals(pm, nominal, data, minus), minus)
                                         : base;
    const std::vector<double>& hi = ok_p ? (fill_residuals(pp, nominal, data, plus), plus)
                                         : base;
    const double step = (ok_p && ok_m) ? 2.0 * h : h;
    for (std::size_t k = 0; k < n; ++k) {
      jac[k][j] = (hi[k] - lo[k]) / step;
    }
  }

  double ss = 0.0;
  for (double r : base) ss += r * r;
  const double variance = ss / static_cast<double>(n - kNumParams);

  std::array<std::array<double, 4>, 4> jtj{};
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < kNumParams; ++i) {
      for (std::size_t j = 0; j < kNumParams; ++j) {
        jtj[i][j] += jac[k][i] * jac[k][j];
      }
    }
  }

  // Invert via Gauss-Jordan with partial pivoting.
  std::array<std::array<double, 8>, 4> aug{};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) aug[i][j] = jtj[i][j];
    aug[i][4 + i] = 1.0;
  }
  for (std::size_t col = 0; col < 4; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 4; ++r) {
      if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
    }
    if (std::abs(aug[pivot][col]) < 1e-300) return inf;
    std::swap(aug[col], aug[pivot]);
    const double d = aug[col][col];
    for (std::size_t j = 0; j < 8; ++j) aug[col][j] /= d;
    for (std::size_t r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = aug[r][col];
      for (std::size_t j = 0; j < 8; ++j) aug[r][j] -= f * aug[col][j];
    }
  }

  std::array<double, 4> err{};
  for (std::size_t i = 0; i < 4; ++i) {
    const double v = variance * aug[i][4 + i];
    err[i] = v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::infinity();
  }
  return err;
}

// Drops non-finite values (and their sigmas) and checks axis ordering.
std::vector<SpectrumPoint> clean_points(std::span<const SpectrumPoint> raw,
                                        std::span<const double> sigma_in,
                                        std::vector<double>& sigma_out, const char* what) {
  if (!sigma_in.empty() && sigma_in.size() != raw.size()) {
    throw std::invalid_argument(std::string(what) + ": sigma length does not match spectrum");
  }
  std::vector<SpectrumPoint> pts;
  pts.reserve(raw.size());
  sigma_out.clear();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i].value)) continue;
    if (!sigma_in.empty()) {
      if (!(sigma_in[i] > 0.0)) {
        throw std::invalid_argument(std::string(what) + ": sigmas must be positive");
      }
      sigma_out.push_back(sigma_in[i]);
    }
    pts.push_back(raw[i]);
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i].detuning_hz > pts[i - 1].detuning_hz)) {
      throw std::invalid_argument(std::string(what) + ": detunings must be strictly increasing");
    }
  }
  return pts;
}

double unweighted_rms(const LineShape& p, const CavityParams& nominal, const FitData& data) {
  std::vector<double> scratch;
  fill_residuals(p, nominal, data, scratch, /*weighted=*/false);
  double ss = 0.0;
  for (double r : scratch) ss += r * r;
  return std::sqrt(ss / std::max<std::size_t>(scratch.size(), 1));
}

FitResult fit_line_shape(const FitData& data, const CavityParams& nominal,
                         const std::optional<CavityParams>& initial, const FitOptions& options) {
  options.validate();
  nominal.validate();
  if (data.transmittance.size() < 8) {
    throw std::invalid_argument("fit: need at least 8 usable transmittance points");
  }
  const double offset_scale = data.span_hz;

  std::vector<LineShape> seeds = heuristic_seeds(data, nominal);
  if (initial) {
    initial->validate();
    seeds.push_back({initial->gamma, initial->rho_l, initial->kappa, 0.0});
  }
  seeds.push_back({nominal.gamma, nominal.rho_l, nominal.kappa, 0.0});

  CounterRng rng(options.seed, 0x7365656473u);  // "seeds"
  const std::size_t base_count = seeds.size();
  while (seeds.size() < static_cast<std::size_t>(options.multistarts)) {
    LineShape p = seeds[seeds.size() % base_count];
    p.gamma = std::clamp(p.gamma * std::exp(0.5 * rng.gaussian()), 1e-9, 0.5);
    p.rho_l = std::clamp(p.rho_l * std::exp(0.5 * rng.gaussian()), 1e-9, 0.5);
    p.kappa = std::clamp(p.kappa * std::exp(0.5 * rng.gaussian()), 1e-6, kPi / 2.0);
    p.offset_hz += 0.02 * data.span_hz * rng.gaussian();
    seeds.push_back(p);
  }

  ShapeFit best;
  for (const auto& seed : seeds) {
    const ShapeFit fit = run_nm(seed, nominal, data, options, offset_scale);
    if (fit.ms < best.ms) best = fit;
  }

  double data_lo = data.transmittance.front().value;
  double data_hi = data_lo;
  for (const auto& pt : data.transmittance) {
    data_lo = std::min(data_lo, pt.value);
    data_hi = std::max(data_hi, pt.value);
  }
  const double range = std::max(data_hi - data_lo, 1e-6);
  if (options.use_de_fallback &&
      (!best.converged || unweighted_rms(best.shape, nominal, data) > 0.25 * range)) {
    const ShapeFit global = run_de_polish(nominal, data, options, offset_scale);
    if (global.ms < best.ms) best = global;
  }

  // Probe the mirrored basin; if it reproduces the data equally well the
  // coupling regime is not identified by this data set.
  const ShapeFit first = best;
  const ShapeFit mirror = run_nm(mirror_shape(best.shape), nominal, data, options, offset_scale);
  if (mirror.ms < best.ms) best = mirror;
  const ShapeFit& runner_up = mirror.ms < first.ms ? first : mirror;
  // The relative margin is meaningless when both fits sit at numerical noise,
  // so an essentially perfect runner-up also counts.
  bool degenerate = runner_up.ms <= best.ms * (1.0 + kDegenerateRmsMargin) ||
                    runner_up.ms <= kPerfectMs;
  if (degenerate) {
    const CavityParams a = shape_params(first.shape, nominal);
    const CavityParams b = shape_params(mirror.shape, nominal);
    // Both basins collapsing onto one point (critical coupling, or a clamped
    // mirror seed relaxing back) is not a two-fold ambiguity.
    const double separation = std::abs(a.x() - b.x()) + std::abs(a.y() - b.y());
    if (separation < 10.0 * kCriticalTol) degenerate = false;
  }

  FitResult out;
  out.params = shape_params(best.shape, nominal);
  out.resonance_offset_hz = best.shape.offset_hz;
  out.residual_rms = std::sqrt(best.ms);
  out.param_stderr = shape_stderr(best.shape, nominal, data);
  out.converged = best.converged;
  out.degenerate = degenerate;
  return out;
}

}  // namespace

void FitOptions::validate() const {
  if (multistarts < 1) {
    throw std::invalid_argument("fit: multistarts must be at least 1");
  }
  if (max_iterations < 10) {
    throw std::invalid_argument("fit: max_iterations must be at least 10");
  }
  if (!(phase_weight >= 0.0)) {
    throw std::invalid_argument("fit: phase_weight must be non-negative");
  }
}

FitResult fit_transmittance(std::span<const SpectrumPoint> transmittance,
                            const CavityParams& nominal,
                            const std::optional<CavityParams>& initial,
                            const FitOptions& options, std::span<const double> value_sigma) {
  FitData data;
  data.transmittance = clean_points(transmittance, value_sigma, data.t_sigma,
                                    "fit_transmittance");
  if (data.transmittance.size() < 2) {
    throw std::invalid_argument("fit_transmittance: not enough finite points");
  }
  data.span_hz =
      data.transmittance.back().detuning_hz - data.transmittance.front().detuning_hz;
  return fit_line_shape(data, nominal, initial, options);
}

FitResult fit_joint(std::span<const SpectrumPoint> transmittance,
                    std::span<const SpectrumPoint> phase, const CavityParams& nominal,
                    const std::optional<CavityParams>& initial, const FitOptions& options,
                    std::span<const double> value_sigma, std::span<const double> phase_sigma) {
  if (transmittance.size() != phase.size()) {
    throw InconsistentSpectraError("fit_joint: spectra differ in length");
  }
  for (std::size_t i = 0; i < transmittance.size(); ++i) {
    if (std::abs(transmittance[i].detuning_hz - phase[i].detuning_hz) > 1e-3) {
      throw InconsistentSpectraError("fit_joint: spectra are on different detuning grids");
    }
  }
  FitData data;
  data.transmittance = clean_points(transmittance, value_sigma, data.t_sigma, "fit_joint");
  data.phase = clean_points(phase, phase_sigma, data.phase_sigma, "fit_joint");
  if (data.transmittance.size() < 2) {
    throw std::invalid_argument("fit_joint: not enough finite points");
  }
  data.span_hz =
      data.transmittance.back().detuning_hz - data.transmittance.front().detuning_hz;
  data.phase_weight = options.phase_weight;
  FitResult joint = fit_line_shape(data, nominal, initial, options);

  // A parameter set exists for each spectrum alone; if the joint solution
  // describes either spectrum an order of magnitude worse than its dedicated
  // fit, the two spectra do not belong to one line shape.
  const LineShape joint_shape = {joint.params.gamma, joint.params.rho_l, joint.params.kappa,
                                 joint.resonance_offset_hz};
  FitData t_only = data;
  t_only.phase.clear();
  t_only.phase_sigma.clear();
  const FitResult t_fit = fit_line_shape(t_only, nominal, initial, options);
  const LineShape t_shape = {t_fit.params.gamma, t_fit.params.rho_l, t_fit.params.kappa,
                             t_fit.resonance_offset_hz};

  FitData p_only = data;
  p_only.transmittance.clear();
  p_only.t_sigma.clear();
  ShapeFit p_fit;
  for (const LineShape& seed : {joint_shape, mirror_shape(joint_shape), t_shape}) {
    const ShapeFit f = run_nm(seed, nominal, p_only, options, data.span_hz);
    if (f.ms < p_fit.ms) p_fit = f;
  }

  const double floor = 1e-9;
  const double joint_t_rms = unweighted_rms(joint_shape, nominal, t_only);
  const double alone_t_rms = unweighted_rms(t_shape, nominal, t_only);
  const double joint_p_rms = unweighted_rms(joint_shape, nominal, p_only);
  const double alone_p_rms = unweighted_rms(p_fit.shape, nominal, p_only);
  if (joint_t_rms > 10.0 * std::max(alone_t_rms, floor) ||
      joint_p_rms > 10.0 * std::max(alone_p_rms, floor)) {
    throw InconsistentSpectraError(
        "fit_joint: no single parameter set describes both spectra");
  }
  return joint;
}

GapFitResult fit_gap_series(std::span<const GapPoint> points, const CavityParams& base,
                            const FitOptions& options) {
  options.validate();
  base.validate();
  std::vector<GapPoint> pts;
  for (const auto& p : points) {
    if (!(p.gap_nm >= 0.0)) {
      throw std::invalid_argument("fit_gap_series: gaps must be non-negative");
    }
    if (std::isfinite(p.t_min) && std::isfinite(p.fwhm_hz) && p.fwhm_hz > 0.0) {
      pts.push_back(p);
    }
  }
  if (pts.size() < 5) {
    throw std::invalid_argument("fit_gap_series: need at least 5 usable gap points");
  }
  std::sort(pts.begin(), pts.end(),
            [](const GapPoint& a, const GapPoint& b) { return a.gap_nm < b.gap_nm; });

  const auto objective_of = [&](const GapCouplingLaw& law, double& out_ms) {
    double ss = 0.0;
    int n = 0;
    for (const auto& p : pts) {
      CavityParams cp = base;
      cp.kappa = law.kappa_at(p.gap_nm);
      if (!(cp.kappa > 0.0 && cp.kappa <= kPi / 2.0)) return false;
      const double t_model = analytic_t_min(cp);
      double w_model = 0.0;
      try {
        w_model = analytic_fwhm_hz(cp);
      } catch (const std::domain_error&) {
        return false;
      }
      const double rt = (t_model - p.t_min) / std::max(p.t_min, 0.02);
      const double rw = std::log(w_model / p.fwhm_hz);
      ss += rt * rt + rw * rw;
      n += 2;
    }
    out_ms = ss / n;
    return true;
  };

  const Objective obj = [&](std::span<const double> u) {
    GapCouplingLaw law;
    law.kappa_0 = std::exp(std::max(u[0], kMinLog));
    law.decay_len_nm = std::exp(std::max(u[1], kMinLog));
    double ms = kPenalty;
    if (law.kappa_0 <= 0.0 || law.kappa_0 > kPi / 2.0 || law.decay_len_nm < 1.0 ||
        law.decay_len_nm > 1e5 || !objective_of(law, ms)) {
      return kPenalty;
    }
    return ms;
  };

  // Seed kappa_0 by forcing each coupling branch through the closest-gap
  // point for a few trial decay lengths.
  std::vector<std::array<double, 2>> seeds;
  const GapPoint& first = pts.front();
  const double x = base.x();
  const double a0 =
      std::sqrt(std::clamp(first.t_min / (1.0 - base.gamma), 0.0, 1.0));
  const double y_over = std::clamp((x - a0) / (1.0 - a0 * x), 0.0, 1.0 - 1e-12);
  const double y_under = std::clamp((x + a0) / (1.0 + a0 * x), 0.0, 1.0 - 1e-12);
  for (const double y0 : {y_over, y_under}) {
    const double kappa_first = std::acos(y0);
    if (!(kappa_first > 0.0)) continue;
    for (double lambda : {80.0, 150.0, 250.0, 450.0}) {
      const double k0 = kappa_first * std::exp(first.gap_nm / lambda);
      if (k0 > 0.0 && k0 <= kPi / 2.0) {
        seeds.push_back({std::log(k0), std::log(lambda)});
      }
    }
  }
  if (seeds.empty()) seeds.push_back({std::log(0.05), std::log(200.0)});

  NmOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.f_tol = 1e-14;
  nm.x_tol = 1e-10;

  NmResult best;
  best.fval = kPenalty;
  for (const auto& seed : seeds) {
    const std::array<double, 2> step = {0.2, 0.2};
    const NmResult res = nelder_mead(obj, seed, step, nm);
    if (res.fval < best.fval) best = res;
  }
  if (options.use_de_fallback && (!best.converged || best.fval >= kPenalty)) {
    const std::array<double, 2> lower = {std::log(1e-4), std::log(20.0)};
    const std::array<double, 2> upper = {std::log(kPi / 2.0), std::log(2000.0)};
    DeOptions de;
    de.scaling_factor = 0.7;
    de.population = 32;
    de.max_generations = 300;
    de.seed = derive_stream(options.seed, 0x676170u);  // "gap"
    const DeResult global = differential_evolution(obj, lower, upper, de);
    const NmResult polished = nelder_mead(obj, global.x, std::array<double, 2>{0.1, 0.1}, nm);
    if (polished.fval < best.fval) best = polished;
  }

  GapFitResult out;
  out.law.kappa_0 = std::exp(best.x[0]);
  out.law.decay_len_nm = std::exp(best.x[1]);
  out.residual_rms = std::sqrt(best.fval);
  out.converged = best.converged;
  out.critical_gap_nm = critical_gap_nm(base, out.law);
  out.critical_in_range =
      out.critical_gap_nm >= pts.front().gap_nm && out.critical_gap_nm <= pts.back().gap_nm;
  return out;
}

}  // namespace spherepol
