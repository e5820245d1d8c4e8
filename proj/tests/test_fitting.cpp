#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "spherepol/errors.hpp"
#include "spherepol/fitting.hpp"
#include "spherepol/photon_sim.hpp"
#include "spherepol/random.hpp"

using namespace spherepol;

namespace {

CavityParams undercoupled_ref() {
  CavityParams p;
  p.gamma = 1e-5;
  p.rho_l = 1.65951693e-05;
  p.kappa = 3.11835231e-03;
  p.fsr_hz = 1.5199e12;
  p.f_res_hz = 3.843493e14;
  return p;
}

CavityParams overcoupled_ref() {
  CavityParams p = undercoupled_ref();
  p.rho_l = 2.39484045e-05;
  p.kappa = 1.00421622e-02;
  return p;
}

std::vector<SpectrumPoint> model_transmittance(const CavityParams& p, double span_hz,
                                               int points, double offset_hz = 0.0) {
  std::vector<SpectrumPoint> out;
  for (int i = 0; i < points; ++i) {
    const double df = -span_hz / 2.0 + i * span_hz / (points - 1);
    out.push_back({df, transmission(p, df - offset_hz).transmittance});
  }
  return out;
}

std::vector<SpectrumPoint> model_phase(const CavityParams& p, double span_hz, int points,
                                       double offset_hz = 0.0) {
  std::vector<SpectrumPoint> out;
  for (int i = 0; i < points; ++i) {
    const double df = -span_hz / 2.0 + i * span_hz / (points - 1);
    out.push_back({df, transmission(p, df - offset_hz).phase_rad});
  }
  return out;
}

// The coupling-mirrored parameter set with the same transmittance curve.
CavityParams mirrored(const CavityParams& p) {
  CavityParams m = p;
  const double x = p.x();
  const double y = p.y();
  m.kappa = std::acos(x);
  m.rho_l = -0.5 * std::log(y * y / (1.0 - p.gamma));
  return m;
}

}  // namespace

TEST_CASE("noiseless transmittance fits recover the observable curve exactly") {
  FitOptions opt;
  opt.seed = 1;
  for (const CavityParams& truth : {undercoupled_ref(), overcoupled_ref()}) {
    const auto data = model_transmittance(truth, 2e8, 161);
    const FitResult fit = fit_transmittance(data, truth);
    CHECK(fit.converged);
    CHECK(fit.residual_rms < 1e-9);
    CHECK(analytic_t_min(fit.params) == doctest::Approx(analytic_t_min(truth)).epsilon(1e-6));
    CHECK(analytic_fwhm_hz(fit.params) ==
          doctest::Approx(analytic_fwhm_hz(truth)).epsilon(1e-6));
    CHECK(std::abs(fit.resonance_offset_hz) < 1.0);
  }
}

TEST_CASE("a displaced resonance is located by the offset parameter") {
  const CavityParams truth = undercoupled_ref();
  const auto data = model_transmittance(truth, 1.2e8, 121, /*offset_hz=*/7.5e6);
  const FitResult fit = fit_transmittance(data, truth);
  CHECK(fit.residual_rms < 1e-9);
  CHECK(fit.resonance_offset_hz == doctest::Approx(7.5e6).epsilon(1e-6));
}

TEST_CASE("amplitude-only fits are flagged as coupling-degenerate") {
  const CavityParams truth = overcoupled_ref();
  const CavityParams twin = mirrored(truth);
  // Same dip, same width: the mirror twin is indistinguishable in amplitude.
  CHECK(analytic_t_min(twin) == doctest::Approx(analytic_t_min(truth)).epsilon(1e-9));
  CHECK(analytic_fwhm_hz(twin) == doctest::Approx(analytic_fwhm_hz(truth)).epsilon(1e-9));

  const auto data = model_transmittance(truth, 2e8, 161);
  const FitResult fit = fit_transmittance(data, truth);
  CHECK(fit.degenerate);
}

TEST_CASE("joint amplitude and phase fits break the coupling degeneracy") {
  const CavityParams truth = overcoupled_ref();
  const auto t = model_transmittance(truth, 2e8, 161);
  const auto ph = model_phase(truth, 2e8, 161);
  const FitResult fit = fit_joint(t, ph, truth);
  CHECK(fit.converged);
  CHECK_FALSE(fit.degenerate);
  CHECK(coupling_regime(fit.params) == CouplingRegime::Overcoupled);
  CHECK(fit.params.kappa == doctest::Approx(truth.kappa).epsilon(1e-4));
  CHECK(fit.params.rho_l == doctest::Approx(truth.rho_l).epsilon(1e-3));
}

TEST_CASE("the joint fit recovers the undercoupled branch as well") {
  const CavityParams truth = undercoupled_ref();
  const auto t = model_transmittance(truth, 6e7, 121);
  const auto ph = model_phase(truth, 6e7, 121);
  const FitResult fit = fit_joint(t, ph, truth);
  CHECK_FALSE(fit.degenerate);
  CHECK(coupling_regime(fit.params) == CouplingRegime::Undercoupled);
}

TEST_CASE("contradictory spectra raise an inconsistency error") {
  const CavityParams truth = overcoupled_ref();
  const auto t = model_transmittance(truth, 2e8, 161);
  // A phase curve three times wider than the amplitude dip cannot come from
  // the same cavity.
  CavityParams wide = truth;
  wide.kappa *= 3.0;
  const auto ph = model_phase(wide, 2e8, 161);
  CHECK_THROWS_AS(fit_joint(t, ph, truth), InconsistentSpectraError);
}

TEST_CASE("spectra on different grids are rejected") {
  const CavityParams truth = undercoupled_ref();
  const auto t = model_transmittance(truth, 6e7, 61);
  auto ph = model_phase(truth, 6e7, 61);
  for (auto& pt : ph) pt.detuning_hz += 1e5;
  CHECK_THROWS_AS(fit_joint(t, ph, truth), InconsistentSpectraError);
}

TEST_CASE("poisson-weighted noisy fits recover dip depth and width") {
  const CavityParams truth = undercoupled_ref();
  CounterRng rng(404, 0);
  const int points = 121;
  std::vector<double> t_min_err, fwhm_err;
  for (int run = 0; run < 5; ++run) {
    std::vector<SpectrumPoint> data;
    std::vector<double> sigma;
    const double denom = 800.0;  // expected far-detuned counts per bin
    for (int i = 0; i < points; ++i) {
      const double df = -3e7 + i * 6e7 / (points - 1);
      const double mean = transmission(truth, df).transmittance * denom;
      const double k = static_cast<double>(rng.poisson(mean));
      data.push_back({df, k / denom});
      sigma.push_back(std::sqrt(std::max(k, 1.0)) / denom);
    }
    FitOptions opt;
    opt.seed = 7 + run;
    const FitResult fit = fit_transmittance(data, truth, std::nullopt, opt, sigma);
    t_min_err.push_back(std::abs(analytic_t_min(fit.params) - 0.400));
    fwhm_err.push_back(std::abs(analytic_fwhm_hz(fit.params) - 1.28e7) / 1.28e7);
  }
  std::sort(t_min_err.begin(), t_min_err.end());
  std::sort(fwhm_err.begin(), fwhm_err.end());
  CHECK(t_min_err[t_min_err.size() / 2] < 0.02);
  CHECK(fwhm_err[fwhm_err.size() / 2] < 0.05);
}

TEST_CASE("too few finite points cannot be fitted") {
  const CavityParams truth = undercoupled_ref();
  std::vector<SpectrumPoint> tiny = model_transmittance(truth, 6e7, 5);
  CHECK_THROWS_AS(fit_transmittance(tiny, truth), std::invalid_argument);
}

TEST_CASE("gap series fitting recovers the coupling law") {
  GapCouplingLaw law;
  law.kappa_0 = 3.73011555e-02;
  law.decay_len_nm = 183.332740;
  CavityParams base = undercoupled_ref();
  base.rho_l = 2.13685340e-05;

  std::vector<GapPoint> series;
  for (double d = 0.0; d <= 800.0; d += 50.0) {
    const CavityParams at = params_at_gap(base, law, d);
    series.push_back({d, analytic_t_min(at), analytic_fwhm_hz(at)});
  }
  FitOptions opt;
  opt.seed = 2;
  const GapFitResult fit = fit_gap_series(series, base, opt);
  CHECK(fit.converged);
  CHECK(fit.law.kappa_0 == doctest::Approx(law.kappa_0).epsilon(1e-6));
  CHECK(fit.law.decay_len_nm == doctest::Approx(law.decay_len_nm).epsilon(1e-6));
  CHECK(fit.critical_in_range);
  CHECK(fit.critical_gap_nm == doctest::Approx(300.0).epsilon(1e-3));
}

TEST_CASE("a scan that stays overcoupled reports no critical point in range") {
  GapCouplingLaw law;
  law.kappa_0 = 3.73011555e-02;
  law.decay_len_nm = 183.332740;
  CavityParams base = undercoupled_ref();
  base.rho_l = 2.13685340e-05;

  std::vector<GapPoint> series;
  for (double d = 0.0; d <= 200.0; d += 25.0) {
    const CavityParams at = params_at_gap(base, law, d);
    series.push_back({d, analytic_t_min(at), analytic_fwhm_hz(at)});
  }
  const GapFitResult fit = fit_gap_series(series, base);
  CHECK_FALSE(fit.critical_in_range);
}

TEST_CASE("gap series fitting needs at least five distances") {
  CavityParams base = undercoupled_ref();
  std::vector<GapPoint> series = {{0.0, 0.9, 4e7}, {100.0, 0.5, 2.5e7},
                                  {200.0, 0.1, 1.6e7}, {300.0, 0.02, 1.2e7}};
  CHECK_THROWS_AS(fit_gap_series(series, base), std::invalid_argument);
}
