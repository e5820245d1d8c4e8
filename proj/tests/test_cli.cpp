#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "spherepol/cli.hpp"

using namespace spherepol;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = SPHEREPOL_CONFIG_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("spherepol_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const TempDir& tmp, const std::string& name, const std::string& body) {
  const fs::path p = tmp.path / name;
  std::ofstream out(p);
  out << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const char* kMinimalConfig = R"({
  "seed": 7,
  "cavity": {"gamma": 1e-5, "rho_l": 1.65951693e-05, "kappa": 3.11835231e-03,
             "fsr_hz": 1.5199e12, "f_res_hz": 3.843493e14,
             "t_all": 0.3, "theta_offset_rad": 0.9},
  "probe": {"power_w": 1.05e-11, "wavelength_m": 7.8e-7},
  "detector": {"efficiency": 0.1294, "dark_rate_hz": 250.0, "bin_time_s": 1e-3},
  "sweep": {"span_hz": 6e7, "points": 41}
})";

}  // namespace

TEST_CASE("the shipped configs parse and validate") {
  for (const char* name : {"undercoupled.json", "overcoupled.json", "fig3.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(kConfigDir / name));
  }
}

TEST_CASE("a minimal config gets protocol defaults") {
  TempDir tmp;
  const RunConfig cfg = load_config(write_config(tmp, "min.json", kMinimalConfig));
  CHECK(cfg.seed == 7);
  CHECK(cfg.sim.seed == 7);
  CHECK(cfg.mle.de.seed == 7);
  CHECK(cfg.fit.seed == 7);
  CHECK(cfg.mle.de.scaling_factor == 1.5);
  CHECK(cfg.mle.de.population == 32);
  CHECK(cfg.mle.dark_rate_hz == 250.0);
  CHECK(cfg.sim.mode == CountingMode::Sequential);
  CHECK(cfg.sweep.center_hz == 0.0);
  CHECK_FALSE(cfg.gap_law.has_value());
}

TEST_CASE("the seed flag overrides the config seed everywhere") {
  TempDir tmp;
  const RunConfig cfg = load_config(write_config(tmp, "min.json", kMinimalConfig), 1234);
  CHECK(cfg.seed == 1234);
  CHECK(cfg.sim.seed == 1234);
  CHECK(cfg.mle.de.seed == 1234);
  CHECK(cfg.fit.seed == 1234);
}

TEST_CASE("unknown keys are rejected with their section named") {
  TempDir tmp;
  std::string bad = kMinimalConfig;
  bad.replace(bad.find("\"span_hz\""), 9, "\"spam_hz\"");
  try {
    load_config(write_config(tmp, "bad.json", bad));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("spam_hz") != std::string::npos);
    CHECK(what.find("sweep") != std::string::npos);
  }
}

TEST_CASE("missing required sections are reported") {
  TempDir tmp;
  const char* no_probe = R"({
    "cavity": {"gamma": 1e-5, "rho_l": 1.6e-05, "kappa": 3.1e-03,
               "fsr_hz": 1.5199e12, "f_res_hz": 3.843493e14,
               "t_all": 0.3, "theta_offset_rad": 0.9},
    "detector": {"efficiency": 0.1, "dark_rate_hz": 250.0, "bin_time_s": 1e-3},
    "sweep": {"span_hz": 6e7, "points": 41}
  })";
  CHECK_THROWS_AS(load_config(write_config(tmp, "p.json", no_probe)), ConfigError);
}

TEST_CASE("malformed json raises a config error with context") {
  TempDir tmp;
  CHECK_THROWS_AS(load_config(write_config(tmp, "trunc.json", "{\"seed\": ")), ConfigError);
}

TEST_CASE("out-of-range values fail validation") {
  TempDir tmp;
  std::string bad = kMinimalConfig;
  bad.replace(bad.find("\"points\": 41"), 12, "\"points\": 1");
  CHECK_THROWS_AS(load_config(write_config(tmp, "pts.json", bad)), ConfigError);

  std::string neg = kMinimalConfig;
  neg.replace(neg.find("\"efficiency\": 0.1294"), 20, "\"efficiency\": -0.2");
  CHECK_THROWS_AS(load_config(write_config(tmp, "neg.json", neg)), ConfigError);
}

TEST_CASE("a gap law plus distance pins the coupling angle") {
  const RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  TempDir tmp;
  std::string with_law = slurp(kConfigDir / "undercoupled.json");
  const auto pos = with_law.rfind('}');
  with_law.insert(pos, R"(, "gap_law": {"kappa_0": 3.73011555e-02, "decay_len_nm": 183.332740})");
  const RunConfig pinned = load_config(write_config(tmp, "pinned.json", with_law));
  GapCouplingLaw law;
  law.kappa_0 = 3.73011555e-02;
  law.decay_len_nm = 183.332740;
  CHECK(pinned.cavity.kappa == doctest::Approx(law.kappa_at(500.0)).epsilon(1e-12));
  CHECK(pinned.cavity.kappa != doctest::Approx(cfg.cavity.kappa).epsilon(1e-6));
}

TEST_CASE("simulate then analyze produces the full output bundle") {
  TempDir tmp;
  const RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  const fs::path record = cmd_simulate(cfg, tmp.path, "run");
  CHECK(record.filename() == "run_record.csv");
  REQUIRE(fs::exists(record));

  const AnalyzeOutputs out = cmd_analyze(record, cfg, tmp.path);
  for (const fs::path& p :
       {out.transmittance_csv, out.phase_csv, out.purity_csv, out.density_matrices_json,
        out.summary_json}) {
    CAPTURE(p.string());
    CHECK(fs::exists(p));
  }
  const nlohmann::json summary = read_json(out.summary_json);
  CHECK(summary.at("regime") == "undercoupled");
  CHECK(summary.at("t_min_fit").get<double>() == doctest::Approx(0.400).epsilon(0.05));
  CHECK(summary.at("fwhm_hz").get<double>() == doctest::Approx(1.28e7).epsilon(0.05));
  CHECK(summary.at("purity_window").at("mean").get<double>() > 0.98);
}

TEST_CASE("the fit command consumes a record directly") {
  TempDir tmp;
  RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  const fs::path record = cmd_simulate(cfg, tmp.path, "fitrun");
  FitInputs inputs;
  inputs.record_csv = record;
  const fs::path fit_path = cmd_fit(inputs, cfg, tmp.path);
  const nlohmann::json fit = read_json(fit_path);
  CHECK(fit.at("converged").get<bool>());
  CHECK(fit.at("params").at("kappa").get<double>() ==
        doctest::Approx(cfg.cavity.kappa).epsilon(0.2));
}

TEST_CASE("the fit command requires exactly one input source") {
  RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  TempDir tmp;
  FitInputs none;
  CHECK_THROWS_AS(cmd_fit(none, cfg, tmp.path), ConfigError);
  FitInputs both;
  both.record_csv = "a.csv";
  both.gap_series_csv = "b.csv";
  CHECK_THROWS_AS(cmd_fit(both, cfg, tmp.path), ConfigError);
}

TEST_CASE("figure fig2 wants the two anchor configs") {
  const RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  TempDir tmp;
  CHECK_THROWS_AS(cmd_figure("fig2", {cfg}, tmp.path), ConfigError);
}

TEST_CASE("figure fig3 emits the gap scan and the law fit") {
  TempDir tmp;
  const RunConfig cfg = load_config(kConfigDir / "fig3.json");
  const auto paths = cmd_figure("fig3", {cfg}, tmp.path);
  REQUIRE(paths.size() == 2);
  const std::string scan = slurp(paths[0]);
  CHECK(scan.find("d_nm,t_min,q") != std::string::npos);
  const nlohmann::json fit = read_json(paths[1]);
  CHECK(fit.at("critical_gap_nm").get<double>() == doctest::Approx(300.0).epsilon(0.1));
  CHECK(fit.at("critical_in_range").get<bool>());
}

TEST_CASE("figure fig3 without a gap scan is a config error") {
  const RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  TempDir tmp;
  CHECK_THROWS_AS(cmd_figure("fig3", {cfg}, tmp.path), ConfigError);
}

TEST_CASE("an unknown figure kind is rejected") {
  const RunConfig cfg = load_config(kConfigDir / "undercoupled.json");
  TempDir tmp;
  CHECK_THROWS_AS(cmd_figure("fig9", {cfg}, tmp.path), ConfigError);
}

TEST_CASE("identical seeds give byte-identical records") {
  TempDir tmp;
  const RunConfig cfg = load_config(kConfigDir / "overcoupled.json");
  const fs::path a_dir = tmp.path / "a";
  const fs::path b_dir = tmp.path / "b";
  fs::create_directories(a_dir);
  fs::create_directories(b_dir);
  const fs::path a = cmd_simulate(cfg, a_dir, "det");
  const fs::path b = cmd_simulate(cfg, b_dir, "det");
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(sidecar_path(a)) == slurp(sidecar_path(b)));
}

TEST_CASE("different seeds give different counts") {
  TempDir tmp;
  const RunConfig cfg = load_config(kConfigDir / "overcoupled.json");
  const RunConfig other = load_config(kConfigDir / "overcoupled.json", 31337);
  const fs::path a = cmd_simulate(cfg, tmp.path, "s1");
  const fs::path b = cmd_simulate(other, tmp.path, "s2");
  CHECK(slurp(a) != slurp(b));
}
