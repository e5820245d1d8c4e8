#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spherepol/fitting.hpp"
#include "spherepol/photon_sim.hpp"
#include "spherepol/tomography.hpp"

namespace spherepol {

inline constexpr std::string_view kToolName = "spherepol";
inline constexpr std::string_view kToolVersion = "0.1.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Identifies the exact inputs that produced an output file.
struct Provenance {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

std::uint64_t fnv1a64(std::string_view data);

// Canonical hash of a config document: serialized with sorted keys, then
// FNV-1a.  Whitespace and key order in the source file do not matter.
std::uint64_t config_hash(const nlohmann::json& config);

// Writes via a temporary file in the same directory plus an atomic rename.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

// JSON conversions for the domain types (sidecars, fit outputs, configs).
nlohmann::json to_json(const CavityParams& params);
nlohmann::json to_json(const GapCouplingLaw& law);
nlohmann::json to_json(const ProbeModel& probe);
nlohmann::json to_json(const DetectorModel& detector);
nlohmann::json to_json(const SimOptions& options);
nlohmann::json to_json(const DensityMatrix& rho);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const GapFitResult& fit);
CavityParams cavity_from_json(const nlohmann::json& j);
GapCouplingLaw gap_law_from_json(const nlohmann::json& j);
ProbeModel probe_from_json(const nlohmann::json& j);
DetectorModel detector_from_json(const nlohmann::json& j);
SimOptions sim_options_from_json(const nlohmann::json& j);

// SweepRecord CSV (detuning_hz, counts_x..counts_l) plus a .meta.json sidecar
// holding the full simulation context.
void write_sweep_record(const std::filesystem::path& csv_path, const SweepRecord& record,
                        const Provenance& prov);
SweepRecord read_sweep_record(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Spectrum CSV (detuning_hz, value, flag); NaN values are written as empty
// fields with a nonzero flag.
void write_spectrum(const std::filesystem::path& path, std::string_view kind,
                    std::span<const SpectrumPoint> points, std::span<const int> flags,
                    const Provenance& prov);
struct SpectrumFile {
  std::vector<SpectrumPoint> points;
  std::vector<int> flags;
};
SpectrumFile read_spectrum(const std::filesystem::path& path);

// Purity CSV (detuning_hz, purity, s1/s0, s2/s0, s3/s0, convergence_flag) and
// the per-point density matrices as JSON.
void write_purity_spectrum(const std::filesystem::path& path,
                           std::span<const PurityPoint> points, const Provenance& prov);
void write_density_matrices(const std::filesystem::path& path,
                            std::span<const PurityPoint> points, const Provenance& prov);

void write_json(const std::filesystem::path& path, const nlohmann::json& body,
                const Provenance& prov);
nlohmann::json read_json(const std::filesystem::path& path);

// Generic CSV with a provenance header; rows are pre-formatted.
void write_table(const std::filesystem::path& path, std::string_view kind,
                 std::string_view header, std::span<const std::string> rows,
                 const Provenance& prov);

// Gap-series CSV (gap_nm, t_min, fwhm_hz).
void write_gap_series(const std::filesystem::path& path, std::span<const GapPoint> points,
                      const Provenance& prov);
std::vector<GapPoint> read_gap_series(const std::filesystem::path& path);

std::string format_double(double v);  // shortest round-trip decimal form

}  // namespace spherepol
