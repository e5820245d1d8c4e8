#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spherepol/cli.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

void report(const std::filesystem::path& path) { std::cout << path.string() << '\n'; }

int run(int argc, char** argv) {
  CLI::App app{"tapered-fiber microsphere cavity: sweep simulation, spectrum analysis, "
               "state tomography and line-shape fitting"};
  app.require_subcommand(1);

  std::vector<std::string> config_paths;
  std::optional<std::uint64_t> seed_override;
  std::string out_dir = ".";
  std::string record_path;
  std::string transmittance_path;
  std::string phase_path;
  std::string gap_series_path;
  std::string stem;
  std::string figure_kind;
  bool amplitude_only = false;

  auto add_common = [&](CLI::App* cmd, bool multi_config) {
    auto* opt = cmd->add_option("--config", config_paths, "JSON config file")
                    ->required()
                    ->check(CLI::ExistingFile);
    if (!multi_config) opt->expected(1);
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  };

  CLI::App* sim = app.add_subcommand("simulate", "run a photon-counting sweep");
  add_common(sim, false);
  sim->add_option("--stem", stem, "output name stem (default: config file stem)");

  CLI::App* analyze =
      app.add_subcommand("analyze", "derive spectra, tomography and a summary from a record");
  add_common(analyze, false);
  analyze->add_option("--record", record_path, "sweep record CSV")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* fit = app.add_subcommand("fit", "fit the coupled-mode line shape or a gap series");
  add_common(fit, false);
  fit->add_option("--record", record_path, "sweep record CSV")->check(CLI::ExistingFile);
  fit->add_option("--transmittance", transmittance_path, "transmittance spectrum CSV")
      ->check(CLI::ExistingFile);
  fit->add_option("--phase", phase_path, "phase spectrum CSV")->check(CLI::ExistingFile);
  fit->add_option("--gap-series", gap_series_path, "gap series CSV (gap_nm,t_min,fwhm_hz)")
      ->check(CLI::ExistingFile);
  fit->add_flag("--amplitude-only", amplitude_only, "ignore phase data");

  CLI::App* figure = app.add_subcommand("figure", "emit a figure data bundle");
  figure->add_option("kind", figure_kind, "fig2 (two anchor sweeps) or fig3 (gap scan)")
      ->required();
  add_common(figure, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  std::filesystem::create_directories(out_dir);

  std::vector<spherepol::RunConfig> configs;
  configs.reserve(config_paths.size());
  for (const std::string& p : config_paths) {
    configs.push_back(spherepol::load_config(p, seed_override));
  }

  if (sim->parsed()) {
    if (stem.empty()) stem = std::filesystem::path(config_paths.front()).stem().string();
    report(spherepol::cmd_simulate(configs.front(), out_dir, stem));
  } else if (analyze->parsed()) {
    const spherepol::AnalyzeOutputs out =
        spherepol::cmd_analyze(record_path, configs.front(), out_dir);
    report(out.transmittance_csv);
    report(out.phase_csv);
    report(out.purity_csv);
    report(out.density_matrices_json);
    report(out.summary_json);
  } else if (fit->parsed()) {
    spherepol::FitInputs inputs;
    if (!record_path.empty()) inputs.record_csv = record_path;
    if (!transmittance_path.empty()) inputs.transmittance_csv = transmittance_path;
    if (!phase_path.empty()) inputs.phase_csv = phase_path;
    if (!gap_series_path.empty()) inputs.gap_series_csv = gap_series_path;
    inputs.amplitude_only = amplitude_only;
    report(spherepol::cmd_fit(inputs, configs.front(), out_dir));
  } else if (figure->parsed()) {
    for (const auto& path : spherepol::cmd_figure(figure_kind, configs, out_dir)) {
      report(path);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const spherepol::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const spherepol::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
