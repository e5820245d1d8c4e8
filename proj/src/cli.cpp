#include "spherepol/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "spherepol/constants.hpp"

namespace spherepol {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const char* where) {
  if (!obj.is_object()) {
    throw ConfigError(std::string("config: '") + where + "' must be an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

double require_number(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) {
    throw ConfigError(std::string("config: ") + where + " is missing '" + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError(std::string("config: ") + where + "." + key + " must be a number");
  }
  return v.get<double>();
}

double optional_number(const json& obj, const char* key, double fallback, const char* where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError(std::string("config: ") + where + "." + key + " must be a number");
  }
  return v.get<double>();
}

// SweepRecord-derived spectra shared by analyze, fit and figure.
struct DerivedSpectra {
  std::vector<SpectrumPoint> transmittance;
  std::vector<int> t_flags;
  std::vector<double> t_sigma;
  std::vector<SpectrumPoint> phase;
  std::vector<int> phase_flags;
};

DerivedSpectra derive_spectra(const SweepRecord& record) {
  const SweepRecord comp =
      record.normalized.empty()
          ? compensate_transmittance(record, record.meta.params.t_all)
          : record;

  const JonesField in = probe_field(record.meta.probe);
  const double arg_a0x = std::arg(in.a_x);
  const double arg_a0y = std::arg(in.a_y);
  const double rate_in =
      photon_rate_hz(record.meta.probe.power_w, record.meta.probe.wavelength_m);
  const DetectorModel& det = record.meta.detector;
  const double f_in_x = std::norm(in.a_x);
  const double denom_x =
      det.efficiency * rate_in * f_in_x * det.bin_time_s * record.meta.params.t_all;

  DerivedSpectra out;
  const std::size_t n = comp.detunings_hz.size();
  out.transmittance.reserve(n);
  out.phase.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double df = comp.detunings_hz[i];

    SpectrumPoint t{df, comp.normalized[i][kBasisX]};
    int t_flag = std::isfinite(t.value) ? 0 : 1;
    out.transmittance.push_back(t);
    out.t_flags.push_back(t_flag);
    const double var_counts = std::max<double>(
        static_cast<double>(comp.counts[i][kBasisX]), 1.0);
    out.t_sigma.push_back(denom_x > 0.0 ? std::sqrt(var_counts) / denom_x : 1.0);

    SpectrumPoint ph{df, std::numeric_limits<double>::quiet_NaN()};
    int ph_flag = 1;
    const CountsStokes cs = stokes_from_counts(comp.point_counts(i), det.dark_rate_hz);
    if (cs.stokes.s0 > 0.0) {
      try {
        ph.value = extract_phase(cs.stokes, arg_a0x, arg_a0y,
                                 record.meta.params.theta_offset_rad);
        ph_flag = cs.low_signal ? 2 : 0;
      } catch (const IndeterminatePhaseError&) {
        // leave as gap
      }
    }
    out.phase.push_back(ph);
    out.phase_flags.push_back(ph_flag);
  }
  return out;
}

MleConfig mle_for_record(const RunConfig& config, const SweepRecord& record) {
  MleConfig mle = config.mle;
  mle.mode = record.meta.options.mode;
  mle.dark_rate_hz = record.meta.detector.dark_rate_hz;
  mle.de.seed = config.seed;
  return mle;
}

std::string strip_suffix(std::string stem, const std::string& suffix) {
  if (stem.size() > suffix.size() &&
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
    stem.erase(stem.size() - suffix.size());
  }
  return stem;
}

json summary_from_fit(const FitResult& fit, const SweepRecord& record,
                      const DerivedSpectra& derived) {
  double observed_min = std::numeric_limits<double>::infinity();
  for (const auto& pt : derived.transmittance) {
    if (std::isfinite(pt.value)) observed_min = std::min(observed_min, pt.value);
  }
  const double fwhm = analytic_fwhm_hz(fit.params);
  json j;
  j["fit"] = to_json(fit);
  j["t_min_observed"] = observed_min;
  j["t_min_fit"] = analytic_t_min(fit.params);
  j["fwhm_hz"] = fwhm;
  j["q_factor"] = quality_factor(record.meta.params.f_res_hz, fwhm);
  switch (coupling_regime(fit.params)) {
    case CouplingRegime::Undercoupled: j["regime"] = "undercoupled"; break;
    case CouplingRegime::Critical: j["regime"] = "critical"; break;
    case CouplingRegime::Overcoupled: j["regime"] = "overcoupled"; break;
  }
  return j;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config '" + path.string() + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config '" + path.string() + "': top level must be an object");
  }
  reject_unknown(doc,
                 {"seed", "cavity", "probe", "detector", "sim", "sweep", "mle", "fit",
                  "analysis", "gap_law", "gap_nm", "gap_scan"},
                 "the top level");
  for (const char* required : {"cavity", "probe", "detector", "sweep"}) {
    if (!doc.contains(required)) {
      throw ConfigError(std::string("config: missing required section '") + required + "'");
    }
  }

  RunConfig cfg;
  cfg.hash = config_hash(doc);

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) {
      throw ConfigError("config: seed must be a non-negative integer");
    }
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }

  try {
    const json& jc = doc.at("cavity");
    reject_unknown(jc, {"gamma", "rho_l", "kappa", "fsr_hz", "f_res_hz", "t_all",
                        "theta_offset_rad"},
                   "cavity");
    cfg.cavity = cavity_from_json(jc);

    const json& jp = doc.at("probe");
    reject_unknown(jp, {"power_w", "wavelength_m", "pol_angle_deg", "pol_phase_rad"}, "probe");
    cfg.probe = probe_from_json(jp);

    const json& jd = doc.at("detector");
    reject_unknown(jd, {"efficiency", "dark_rate_hz", "bin_time_s", "count_cap"}, "detector");
    cfg.detector = detector_from_json(jd);

    if (doc.contains("sim")) {
      const json& js = doc.at("sim");
      reject_unknown(js, {"mode", "depol_strength", "jitter_hz"}, "sim");
      cfg.sim = sim_options_from_json(js);
    }

    if (doc.contains("gap_law")) {
      const json& jg = doc.at("gap_law");
      reject_unknown(jg, {"kappa_0", "decay_len_nm"}, "gap_law");
      cfg.gap_law = gap_law_from_json(jg);
      cfg.gap_law->validate();
    }
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }

  const json& jw = doc.at("sweep");
  reject_unknown(jw, {"center_hz", "span_hz", "points"}, "sweep");
  cfg.sweep.center_hz = optional_number(jw, "center_hz", 0.0, "sweep");
  cfg.sweep.span_hz = require_number(jw, "span_hz", "sweep");
  cfg.sweep.points = static_cast<int>(require_number(jw, "points", "sweep"));
  if (!(cfg.sweep.span_hz > 0.0)) {
    throw ConfigError("config: sweep.span_hz must be positive");
  }
  if (cfg.sweep.points < 2) {
    throw ConfigError("config: sweep.points must be at least 2");
  }

  if (doc.contains("mle")) {
    const json& jm = doc.at("mle");
    reject_unknown(jm,
                   {"scaling_factor", "crossover_prob", "population", "max_generations",
                    "tolerance", "stall_generations"},
                   "mle");
    cfg.mle.de.scaling_factor = optional_number(jm, "scaling_factor", 1.5, "mle");
    cfg.mle.de.crossover_prob = optional_number(jm, "crossover_prob", 0.9, "mle");
    cfg.mle.de.population = static_cast<int>(optional_number(jm, "population", 32, "mle"));
    cfg.mle.de.max_generations =
        static_cast<int>(optional_number(jm, "max_generations", 500, "mle"));
    cfg.mle.de.tolerance = optional_number(jm, "tolerance", 1e-10, "mle");
    cfg.mle.de.stall_generations =
        static_cast<int>(optional_number(jm, "stall_generations", 50, "mle"));
  }

  if (doc.contains("fit")) {
    const json& jf = doc.at("fit");
    reject_unknown(jf, {"multistarts", "max_iterations", "phase_weight", "use_de_fallback"},
                   "fit");
    cfg.fit.multistarts = static_cast<int>(optional_number(jf, "multistarts", 8, "fit"));
    cfg.fit.max_iterations =
        static_cast<int>(optional_number(jf, "max_iterations", 4000, "fit"));
    cfg.fit.phase_weight = optional_number(jf, "phase_weight", 1.0, "fit");
    if (jf.contains("use_de_fallback")) {
      if (!jf.at("use_de_fallback").is_boolean()) {
        throw ConfigError("config: fit.use_de_fallback must be a boolean");
      }
      cfg.fit.use_de_fallback = jf.at("use_de_fallback").get<bool>();
    }
  }

  if (doc.contains("analysis")) {
    const json& ja = doc.at("analysis");
    reject_unknown(ja, {"window_min_hz", "window_max_hz"}, "analysis");
    cfg.analysis.window_min_hz = optional_number(ja, "window_min_hz", 0.0, "analysis");
    cfg.analysis.window_max_hz = optional_number(ja, "window_max_hz", 0.0, "analysis");
    if (cfg.analysis.window_max_hz != 0.0 &&
        !(cfg.analysis.window_max_hz > cfg.analysis.window_min_hz)) {
      throw ConfigError("config: analysis.window_max_hz must exceed window_min_hz");
    }
  }

  if (doc.contains("gap_nm")) {
    if (!doc.at("gap_nm").is_number()) {
      throw ConfigError("config: gap_nm must be a number");
    }
    cfg.gap_nm = doc.at("gap_nm").get<double>();
    if (!(*cfg.gap_nm >= 0.0)) {
      throw ConfigError("config: gap_nm must be non-negative");
    }
  }

  if (doc.contains("gap_scan")) {
    const json& jg = doc.at("gap_scan");
    reject_unknown(jg, {"min_nm", "max_nm", "step_nm"}, "gap_scan");
    GapScanDef scan;
    scan.min_nm = optional_number(jg, "min_nm", 0.0, "gap_scan");
    scan.max_nm = require_number(jg, "max_nm", "gap_scan");
    scan.step_nm = require_number(jg, "step_nm", "gap_scan");
    if (!(scan.step_nm > 0.0) || !(scan.max_nm >= scan.min_nm) || !(scan.min_nm >= 0.0)) {
      throw ConfigError("config: gap_scan must satisfy 0 <= min_nm <= max_nm, step_nm > 0");
    }
    cfg.gap_scan = scan;
  }

  // A gap law plus a gap distance pins the coupling angle.
  if (cfg.gap_law && cfg.gap_nm) {
    cfg.cavity = params_at_gap(cfg.cavity, *cfg.gap_law, *cfg.gap_nm);
  }

  if (seed_override) cfg.seed = *seed_override;
  cfg.sim.seed = cfg.seed;
  cfg.mle.de.seed = cfg.seed;
  cfg.fit.seed = cfg.seed;
  cfg.mle.mode = cfg.sim.mode;
  cfg.mle.dark_rate_hz = cfg.detector.dark_rate_hz;

  try {
    cfg.cavity.validate();
    cfg.probe.validate();
    cfg.detector.validate();
    cfg.sim.validate();
    cfg.mle.de.validate(1);
    cfg.fit.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::filesystem::path cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir,
                                   const std::string& stem) {
  const std::vector<double> grid =
      detuning_grid(config.sweep.center_hz, config.sweep.span_hz, config.sweep.points);
  const SweepRecord record =
      simulate_sweep(config.cavity, config.probe, config.detector, grid, config.sim);
  const Provenance prov{config.hash, config.seed};
  const std::filesystem::path path = out_dir / (stem + "_record.csv");
  write_sweep_record(path, record, prov);
  return path;
}

AnalyzeOutputs cmd_analyze(const std::filesystem::path& record_csv, const RunConfig& config,
                           const std::filesystem::path& out_dir) {
  const SweepRecord record = read_sweep_record(record_csv);
  const DerivedSpectra derived = derive_spectra(record);
  const Provenance prov{config.hash, config.seed};
  const std::string stem = strip_suffix(record_csv.stem().string(), "_record");

  AnalyzeOutputs out;
  out.transmittance_csv = out_dir / (stem + "_transmittance.csv");
  out.phase_csv = out_dir / (stem + "_phase.csv");
  out.purity_csv = out_dir / (stem + "_purity.csv");
  out.density_matrices_json = out_dir / (stem + "_density_matrices.json");
  out.summary_json = out_dir / (stem + "_summary.json");

  write_spectrum(out.transmittance_csv, "transmittance-spectrum", derived.transmittance,
                 derived.t_flags, prov);
  write_spectrum(out.phase_csv, "phase-spectrum", derived.phase, derived.phase_flags, prov);

  const std::vector<PurityPoint> purity = purity_spectrum(record, mle_for_record(config, record));
  write_purity_spectrum(out.purity_csv, purity, prov);
  write_density_matrices(out.density_matrices_json, purity, prov);

  const FitResult fit = fit_joint(derived.transmittance, derived.phase, record.meta.params,
                                  std::nullopt, config.fit, derived.t_sigma, {});
  json summary = summary_from_fit(fit, record, derived);

  const double span =
      record.detunings_hz.empty()
          ? 0.0
          : record.detunings_hz.back() - record.detunings_hz.front();
  double win_min = config.analysis.window_min_hz;
  double win_max = config.analysis.window_max_hz;
  if (win_max <= 0.0) {
    win_min = span / 3.0;
    win_max = span / 2.0;
  }
  json window;
  window["abs_min_hz"] = win_min;
  window["abs_max_hz"] = win_max;
  try {
    const WindowStats stats = windowed_purity(purity, win_min, win_max);
    window["mean"] = stats.mean;
    window["stddev"] = stats.stddev;
    window["count"] = stats.count;
  } catch (const std::invalid_argument&) {
    window["count"] = 0;
  }
  summary["purity_window"] = window;
  write_json(out.summary_json, summary, prov);
  return out;
}

std::filesystem::path cmd_fit(const FitInputs& inputs, const RunConfig& config,
                              const std::filesystem::path& out_dir) {
  const int sources = (inputs.record_csv ? 1 : 0) + (inputs.transmittance_csv ? 1 : 0) +
                      (inputs.gap_series_csv ? 1 : 0);
  if (sources != 1) {
    throw ConfigError("fit: give exactly one of a record, a transmittance spectrum, "
                      "or a gap series");
  }
  if (inputs.phase_csv && !inputs.transmittance_csv) {
    throw ConfigError("fit: a phase spectrum requires a transmittance spectrum");
  }
  const Provenance prov{config.hash, config.seed};

  if (inputs.gap_series_csv) {
    const std::vector<GapPoint> series = read_gap_series(*inputs.gap_series_csv);
    const GapFitResult fit = fit_gap_series(series, config.cavity, config.fit);
    const std::filesystem::path path =
        out_dir / (inputs.gap_series_csv->stem().string() + "_gapfit.json");
    write_json(path, to_json(fit), prov);
    return path;
  }

  FitResult fit;
  std::string stem;
  if (inputs.record_csv) {
    const SweepRecord record = read_sweep_record(*inputs.record_csv);
    const DerivedSpectra derived = derive_spectra(record);
    stem = strip_suffix(inputs.record_csv->stem().string(), "_record");
    if (inputs.amplitude_only) {
      fit = fit_transmittance(derived.transmittance, record.meta.params, std::nullopt,
                              config.fit, derived.t_sigma);
    } else {
      fit = fit_joint(derived.transmittance, derived.phase, record.meta.params, std::nullopt,
                      config.fit, derived.t_sigma, {});
    }
  } else {
    const SpectrumFile t = read_spectrum(*inputs.transmittance_csv);
    stem = inputs.transmittance_csv->stem().string();
    if (inputs.phase_csv && !inputs.amplitude_only) {
      const SpectrumFile ph = read_spectrum(*inputs.phase_csv);
      fit = fit_joint(t.points, ph.points, config.cavity, std::nullopt, config.fit);
    } else {
      fit = fit_transmittance(t.points, config.cavity, std::nullopt, config.fit);
    }
  }
  const std::filesystem::path path = out_dir / (stem + "_fit.json");
  write_json(path, to_json(fit), prov);
  return path;
}

std::vector<std::filesystem::path> cmd_figure(const std::string& kind,
                                              const std::vector<RunConfig>& configs,
                                              const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;

  if (kind == "fig2") {
    if (configs.size() != 2) {
      throw ConfigError("figure fig2: expected two configs (undercoupled, overcoupled)");
    }
    const char* t_panel[2] = {"a", "b"};
    const char* ph_panel[2] = {"c", "d"};
    const char* pu_panel[2] = {"e", "f"};
    for (std::size_t i = 0; i < 2; ++i) {
      const RunConfig& cfg = configs[i];
      const Provenance prov{cfg.hash, cfg.seed};
      std::string label = cfg.gap_nm
                              ? std::to_string(static_cast<long long>(*cfg.gap_nm)) + "nm"
                              : std::string("panel") + t_panel[i];

      const std::vector<double> grid =
          detuning_grid(cfg.sweep.center_hz, cfg.sweep.span_hz, cfg.sweep.points);
      const SweepRecord record =
          simulate_sweep(cfg.cavity, cfg.probe, cfg.detector, grid, cfg.sim);
      const DerivedSpectra derived = derive_spectra(record);
      const std::vector<PurityPoint> purity =
          purity_spectrum(record, mle_for_record(cfg, record));

      const auto t_path =
          out_dir / ("fig2" + std::string(t_panel[i]) + "_transmittance_" + label + ".csv");
      const auto ph_path =
          out_dir / ("fig2" + std::string(ph_panel[i]) + "_phase_" + label + ".csv");
      const auto pu_path =
          out_dir / ("fig2" + std::string(pu_panel[i]) + "_purity_" + label + ".csv");
      write_spectrum(t_path, "fig2-transmittance", derived.transmittance, derived.t_flags,
                     prov);
      write_spectrum(ph_path, "fig2-phase", derived.phase, derived.phase_flags, prov);
      write_purity_spectrum(pu_path, purity, prov);
      written.push_back(t_path);
      written.push_back(ph_path);
      written.push_back(pu_path);
    }
    return written;
  }

  if (kind == "fig3") {
    if (configs.size() != 1) {
      throw ConfigError("figure fig3: expected exactly one config");
    }
    const RunConfig& cfg = configs[0];
    if (!cfg.gap_law || !cfg.gap_scan) {
      throw ConfigError("figure fig3: config needs gap_law and gap_scan sections");
    }
    const Provenance prov{cfg.hash, cfg.seed};

    std::vector<GapPoint> series;
    std::vector<std::string> rows;
    for (double d = cfg.gap_scan->min_nm; d <= cfg.gap_scan->max_nm + 1e-9;
         d += cfg.gap_scan->step_nm) {
      const CavityParams at_gap = params_at_gap(cfg.cavity, *cfg.gap_law, d);
      GapPoint pt;
      pt.gap_nm = d;
      pt.t_min = analytic_t_min(at_gap);
      pt.fwhm_hz = analytic_fwhm_hz(at_gap);
      series.push_back(pt);
      const double q = quality_factor(at_gap.f_res_hz, pt.fwhm_hz);
      rows.push_back(format_double(d) + ',' + format_double(pt.t_min) + ',' +
                     format_double(q));
    }
    if (series.empty()) {
      throw ConfigError("figure fig3: gap scan produced no points");
    }

    const auto scan_path = out_dir / "fig3_gap_scan.csv";
    write_table(scan_path, "fig3-gap-scan", "d_nm,t_min,q", rows, prov);
    written.push_back(scan_path);

    const GapFitResult fit = fit_gap_series(series, cfg.cavity, cfg.fit);
    const auto fit_path = out_dir / "fig3_gapfit.json";
    write_json(fit_path, to_json(fit), prov);
    written.push_back(fit_path);
    return written;
  }

  throw ConfigError("figure: kind must be 'fig2' or 'fig3'");
}

}  // namespace spherepol
