#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "spherepol/constants.hpp"
#include "spherepol/coupled_mode.hpp"
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

}  // namespace

TEST_CASE("transmission magnitude squared equals the reported transmittance") {
  const CavityParams p = overcoupled_ref();
  for (double df : {-8e7, -1.3e6, 0.0, 2.5e6, 6e7}) {
    const ComplexTransmission t = transmission(p, df);
    CHECK(std::norm(t.amplitude_ratio) == doctest::Approx(t.transmittance).epsilon(1e-12));
  }
}

TEST_CASE("on-resonance transmittance matches its closed form") {
  for (const CavityParams& p : {undercoupled_ref(), overcoupled_ref()}) {
    CHECK(transmission(p, 0.0).transmittance ==
          doctest::Approx(analytic_t_min(p)).epsilon(1e-12));
  }
}

TEST_CASE("reference configurations hit their designed dip depths") {
  CHECK(analytic_t_min(undercoupled_ref()) == doctest::Approx(0.400).epsilon(1e-6));
  CHECK(analytic_t_min(overcoupled_ref()) == doctest::Approx(0.0732026).epsilon(1e-5));
}

TEST_CASE("far-detuned transmittance approaches the loss-limited baseline") {
  const CavityParams p = undercoupled_ref();
  const double base = analytic_baseline(p);
  CHECK(base == doctest::Approx(1.0 - p.gamma).epsilon(1e-12));
  // Half an FSR away the dip contribution is negligible.
  CHECK(transmission(p, p.fsr_hz / 2.0).transmittance == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("sampled linewidth agrees with the analytic full width") {
  // The scan must reach far into the wings, since fwhm_hz estimates the
  // baseline from the spectrum edges.
  for (const CavityParams& p : {undercoupled_ref(), overcoupled_ref()}) {
    const double expect = analytic_fwhm_hz(p);
    std::vector<SpectrumPoint> spec;
    for (int i = -4000; i <= 4000; ++i) {
      const double df = i * expect / 100.0;
      spec.push_back({df, transmission(p, df).transmittance});
    }
    CHECK(fwhm_hz(spec) == doctest::Approx(expect).epsilon(1e-3));
  }
}

TEST_CASE("designed linewidths are 12.8 and 38.4 MHz") {
  CHECK(analytic_fwhm_hz(undercoupled_ref()) == doctest::Approx(1.28e7).epsilon(1e-5));
  CHECK(analytic_fwhm_hz(overcoupled_ref()) == doctest::Approx(3.84e7).epsilon(1e-5));
}

TEST_CASE("phase is zero on resonance and odd in detuning") {
  for (const CavityParams& p : {undercoupled_ref(), overcoupled_ref()}) {
    CHECK(std::abs(transmission(p, 0.0).phase_rad) < 1e-12);
    for (double df : {3e5, 4.7e6, 2.2e7, 1e8}) {
      CHECK(transmission(p, df).phase_rad ==
            doctest::Approx(-transmission(p, -df).phase_rad).epsilon(1e-10));
    }
  }
}

TEST_CASE("undercoupled phase decays to zero far from resonance") {
  const CavityParams p = undercoupled_ref();
  CHECK(std::abs(transmission(p, 1e8).phase_rad) < 0.05);
  CHECK(std::abs(transmission(p, 5e8).phase_rad) < 0.01);
}

TEST_CASE("overcoupled phase reaches 2.9 rad at 100 MHz detuning") {
  const CavityParams p = overcoupled_ref();
  CHECK(transmission(p, 1e8).phase_rad == doctest::Approx(2.9).epsilon(1e-4));
  CHECK(transmission(p, -1e8).phase_rad == doctest::Approx(-2.9).epsilon(1e-4));
}

TEST_CASE("coupling regime follows the sign of y minus x") {
  CHECK(coupling_regime(undercoupled_ref()) == CouplingRegime::Undercoupled);
  CHECK(coupling_regime(overcoupled_ref()) == CouplingRegime::Overcoupled);
  CavityParams p = undercoupled_ref();
  p.kappa = std::acos(p.x());
  CHECK(coupling_regime(p) == CouplingRegime::Critical);
}

TEST_CASE("critical coupling extinguishes the resonance") {
  CounterRng rng(2024, 0);
  for (int i = 0; i < 1000; ++i) {
    CavityParams p = undercoupled_ref();
    p.gamma = 1e-4 + rng.uniform() * 0.05;
    p.rho_l = 2e-3 + rng.uniform() * 0.1;
    const double delta = (rng.uniform() * 2.0 - 1.0) * 1e-9;
    p.kappa = std::acos(std::clamp(p.x() + delta, -1.0, 1.0));
    CAPTURE(p.gamma);
    CAPTURE(p.rho_l);
    REQUIRE(transmission(p, 0.0).transmittance < 1e-12);
  }
}

TEST_CASE("measured width detects unresolved and multi-dip spectra") {
  const CavityParams p = undercoupled_ref();
  const double w = analytic_fwhm_hz(p);

  SUBCASE("a flat spectrum has no dip") {
    std::vector<SpectrumPoint> flat;
    for (int i = 0; i < 32; ++i) flat.push_back({i * 1e6, 0.99999});
    CHECK_THROWS_AS(fwhm_hz(flat), NoDipError);
  }
  SUBCASE("a dip cut off at the scan edge is not fully resolved") {
    // One flank only: the half level is crossed once, so no width exists.
    std::vector<SpectrumPoint> spec;
    for (int i = -200; i <= 0; ++i) {
      const double df = i * w / 20.0;
      spec.push_back({df, transmission(p, df).transmittance});
    }
    CHECK_THROWS_AS(fwhm_hz(spec), AmbiguousDipError);
  }
  SUBCASE("two dips in one scan are ambiguous") {
    std::vector<SpectrumPoint> spec;
    for (int i = -400; i <= 400; ++i) {
      const double df = i * w / 20.0;
      const double copy = transmission(p, df - 10.0 * w).transmittance;
      const double value = transmission(p, df).transmittance;
      spec.push_back({df, std::min(value, copy)});
    }
    CHECK_THROWS_AS(fwhm_hz(spec), AmbiguousDipError);
  }
  SUBCASE("fewer than five points is rejected") {
    std::vector<SpectrumPoint> spec = {{-1e6, 1.0}, {0.0, 0.4}, {1e6, 1.0}};
    CHECK_THROWS_AS(fwhm_hz(spec), std::invalid_argument);
  }
}

TEST_CASE("quality factor divides frequency by linewidth") {
  CHECK(quality_factor(3.843493e14, 1.28e7) == doctest::Approx(3.0027e7).epsilon(1e-4));
  CHECK(quality_factor(3.843493e14, 1.28e7, true) ==
        doctest::Approx(2.0 * kPi * 3.0027e7).epsilon(1e-4));
}

TEST_CASE("gap law reproduces the designed critical distance") {
  GapCouplingLaw law;
  law.kappa_0 = 3.73011555e-02;
  law.decay_len_nm = 183.332740;
  CavityParams base = undercoupled_ref();
  base.rho_l = 2.13685340e-05;
  CHECK(critical_gap_nm(base, law) == doctest::Approx(300.0).epsilon(1e-6));

  const CavityParams at = params_at_gap(base, law, 500.0);
  CHECK(at.kappa == doctest::Approx(law.kappa_at(500.0)).epsilon(1e-12));
  CHECK(at.gamma == base.gamma);
  CHECK(at.rho_l == base.rho_l);
}

TEST_CASE("phase unwrapping removes two-pi jumps") {
  std::vector<double> wrapped;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const double theta = -3.0 * kPi + i * (6.0 * kPi / (n - 1));
    wrapped.push_back(std::remainder(theta, 2.0 * kPi));
  }
  const std::vector<double> unwrapped = unwrap_phase(wrapped);
  for (int i = 1; i < n; ++i) {
    CHECK(std::abs(unwrapped[i] - unwrapped[i - 1]) < kPi);
  }
  // Unwrapped series spans the full six pi of accumulated phase.
  CHECK(unwrapped.back() - unwrapped.front() == doctest::Approx(6.0 * kPi).epsilon(1e-9));
}

TEST_CASE("parameter validation rejects nonphysical values") {
  CavityParams p = undercoupled_ref();
  CHECK_NOTHROW(p.validate());
  SUBCASE("negative loss") {
    p.gamma = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("coupling angle beyond a quarter turn") {
    p.kappa = 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("zero free spectral range") {
    p.fsr_hz = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
}
