#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "spherepol/io.hpp"
#include "spherepol/photon_sim.hpp"

using namespace spherepol;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("spherepol_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SweepRecord tiny_record() {
  CavityParams p;
  p.gamma = 1e-5;
  p.rho_l = 1.65951693e-05;
  p.kappa = 3.11835231e-03;
  p.fsr_hz = 1.5199e12;
  p.f_res_hz = 3.843493e14;
  p.t_all = 0.30;
  p.theta_offset_rad = 0.9;
  ProbeModel probe;
  probe.power_w = 1.05e-11;
  probe.wavelength_m = 7.8e-7;
  DetectorModel det;
  det.efficiency = 0.1294;
  det.dark_rate_hz = 250.0;
  det.bin_time_s = 1e-3;
  SimOptions opt;
  opt.seed = 21;
  return simulate_sweep(p, probe, det, detuning_grid(0.0, 4e7, 9), opt);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config hashing ignores formatting but not values") {
  const auto a = nlohmann::json::parse(R"({"alpha": 1.5, "beta": {"x": 2}})");
  const auto b = nlohmann::json::parse(R"({ "beta": {"x": 2},   "alpha": 1.5 })");
  const auto c = nlohmann::json::parse(R"({"alpha": 1.5, "beta": {"x": 3}})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("fnv hashing matches the published test vector") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("shortest round-trip formatting survives parsing") {
  for (double v : {0.1, 1.0 / 3.0, 1.28e7, -3.843493e14, 0.0, 2.2250738585072014e-308}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("sweep records round-trip through csv and sidecar") {
  TempDir tmp;
  const SweepRecord rec = tiny_record();
  const Provenance prov{0xabcdef, 21};
  const fs::path csv = tmp.path / "tiny_record.csv";
  write_sweep_record(csv, rec, prov);
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(sidecar_path(csv)));

  const SweepRecord back = read_sweep_record(csv);
  REQUIRE(back.detunings_hz.size() == rec.detunings_hz.size());
  for (std::size_t i = 0; i < rec.detunings_hz.size(); ++i) {
    CHECK(back.detunings_hz[i] == rec.detunings_hz[i]);
    CHECK(back.counts[i] == rec.counts[i]);
  }
  CHECK(back.meta.params.kappa == rec.meta.params.kappa);
  CHECK(back.meta.detector.dark_rate_hz == rec.meta.detector.dark_rate_hz);
  CHECK(back.meta.options.seed == rec.meta.options.seed);
}

TEST_CASE("writing the same record twice is byte identical") {
  TempDir tmp;
  const SweepRecord rec = tiny_record();
  const Provenance prov{1, 2};
  const fs::path a = tmp.path / "a_record.csv";
  const fs::path b = tmp.path / "b_record.csv";
  write_sweep_record(a, rec, prov);
  write_sweep_record(b, rec, prov);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(sidecar_path(a)) == slurp(sidecar_path(b)));
}

TEST_CASE("a record csv without its sidecar is rejected") {
  TempDir tmp;
  const SweepRecord rec = tiny_record();
  const fs::path csv = tmp.path / "orphan_record.csv";
  write_sweep_record(csv, rec, Provenance{});
  fs::remove(sidecar_path(csv));
  CHECK_THROWS_AS(read_sweep_record(csv), IoError);
}

TEST_CASE("spectra keep gaps as empty fields with a nonzero flag") {
  TempDir tmp;
  std::vector<SpectrumPoint> pts = {
      {-1e6, 0.9}, {0.0, std::numeric_limits<double>::quiet_NaN()}, {1e6, 0.8}};
  std::vector<int> flags = {0, 1, 0};
  const fs::path path = tmp.path / "spec.csv";
  write_spectrum(path, "test-spectrum", pts, flags, Provenance{});

  const std::string text = slurp(path);
  CHECK(text.find(",,1") != std::string::npos);  // empty value, flag set
  CHECK(text.find("nan") == std::string::npos);

  const SpectrumFile back = read_spectrum(path);
  REQUIRE(back.points.size() == 3);
  CHECK(back.points[0].value == 0.9);
  CHECK(std::isnan(back.points[1].value));
  CHECK(back.flags == flags);
}

TEST_CASE("the purity csv uses the documented header") {
  TempDir tmp;
  PurityPoint pt;
  pt.detuning_hz = 1e6;
  pt.purity = 0.97;
  pt.bloch = {0.1, 0.2, -0.3};
  pt.converged = true;
  const fs::path path = tmp.path / "purity.csv";
  write_purity_spectrum(path, std::vector<PurityPoint>{pt}, Provenance{});
  const std::string text = slurp(path);
  CHECK(text.find("detuning_hz,purity,s1/s0,s2/s0,s3/s0,convergence_flag") !=
        std::string::npos);
  CHECK(text.find("1e+06,0.97,0.1,0.2,-0.3,0") != std::string::npos);
}

TEST_CASE("gap series round-trip preserves all three columns") {
  TempDir tmp;
  std::vector<GapPoint> pts = {{0.0, 0.86, 3.5e8}, {300.0, 1.2e-7, 1.28e7},
                               {800.0, 0.98, 1.28e7}};
  const fs::path path = tmp.path / "gaps.csv";
  write_gap_series(path, pts, Provenance{});
  const std::vector<GapPoint> back = read_gap_series(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].gap_nm == pts[i].gap_nm);
    CHECK(back[i].t_min == pts[i].t_min);
    CHECK(back[i].fwhm_hz == pts[i].fwhm_hz);
  }
}

TEST_CASE("atomic writes leave no temporary files behind") {
  TempDir tmp;
  const fs::path path = tmp.path / "note.txt";
  write_text_atomic(path, "payload");
  CHECK(slurp(path) == "payload");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
}

TEST_CASE("json documents round-trip with provenance attached") {
  TempDir tmp;
  nlohmann::json body;
  body["answer"] = 42;
  const fs::path path = tmp.path / "doc.json";
  write_json(path, body, Provenance{0x1234, 99});
  const nlohmann::json back = read_json(path);
  CHECK(back.at("answer") == 42);
  CHECK(back.at("provenance").at("seed") == 99);
}

TEST_CASE("density matrices serialize their complex entries") {
  DensityMatrix rho = DensityMatrix::from_bloch(0.0, 0.6, -0.6);
  const nlohmann::json j = to_json(rho);
  CHECK(j.at("rho01").at("re").get<double>() == doctest::Approx(0.3));
  CHECK(j.at("rho01").at("im").get<double>() == doctest::Approx(-0.3));
}
