#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spherepol/fitting.hpp"
#include "spherepol/io.hpp"
#include "spherepol/photon_sim.hpp"
#include "spherepol/tomography.hpp"

namespace spherepol {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepDef {
  double center_hz = 0.0;
  double span_hz = 0.0;
  int points = 0;
};

struct GapScanDef {
  double min_nm = 0.0;
  double max_nm = 0.0;
  double step_nm = 0.0;
};

struct AnalysisDef {
  double window_min_hz = 0.0;  // 0 -> derived from the sweep span
  double window_max_hz = 0.0;
};

// One parsed and range-checked config file.
struct RunConfig {
  std::uint64_t seed = 0;
  CavityParams cavity;
  ProbeModel probe;
  DetectorModel detector;
  SimOptions sim;
  SweepDef sweep;
  MleConfig mle;
  FitOptions fit;
  AnalysisDef analysis;
  std::optional<GapCouplingLaw> gap_law;
  std::optional<double> gap_nm;
  std::optional<GapScanDef> gap_scan;
  std::uint64_t hash = 0;  // canonical hash of the config document
};

// Parses, schema-checks (unknown keys rejected) and range-checks a config.
RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

// Command entry points; all outputs go under out_dir.  Errors are thrown:
// ConfigError / std::invalid_argument for bad inputs, domain and numeric
// errors for failed computations, IoError for file problems.
std::filesystem::path cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir,
                                   const std::string& stem);

struct AnalyzeOutputs {
  std::filesystem::path transmittance_csv;
  std::filesystem::path phase_csv;
  std::filesystem::path purity_csv;
  std::filesystem::path density_matrices_json;
  std::filesystem::path summary_json;
};
AnalyzeOutputs cmd_analyze(const std::filesystem::path& record_csv, const RunConfig& config,
                           const std::filesystem::path& out_dir);

struct FitInputs {
  std::optional<std::filesystem::path> record_csv;
  std::optional<std::filesystem::path> transmittance_csv;
  std::optional<std::filesystem::path> phase_csv;
  std::optional<std::filesystem::path> gap_series_csv;
  bool amplitude_only = false;
};
std::filesystem::path cmd_fit(const FitInputs& inputs, const RunConfig& config,
                              const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> cmd_figure(const std::string& kind,
                                              const std::vector<RunConfig>& configs,
                                              const std::filesystem::path& out_dir);

}  // namespace spherepol
