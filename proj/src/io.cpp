#include "spherepol/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <system_error>

namespace spherepol {

namespace {

using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string header_lines(std::string_view kind, const Provenance& prov) {
  std::string out;
  out += "# ";
  out += kToolName;
  out += " ";
  out += kind;
  out += " v";
  out += kToolVersion;
  out += "\n# config_hash=";
  out += hash_hex(prov.config_hash);
  out += "\n# seed=";
  out += std::to_string(prov.seed);
  out += "\n";
  return out;
}

json provenance_json(const Provenance& prov) {
  json j;
  j["tool"] = std::string(kToolName);
  j["version"] = std::string(kToolVersion);
  j["config_hash"] = hash_hex(prov.config_hash);
  j["seed"] = prov.seed;
  return j;
}

void require_keys(const json& j, std::initializer_list<const char*> keys,
                  const char* context) {
  if (!j.is_object()) {
    throw IoError(std::string(context) + ": expected a JSON object");
  }
  for (const char* k : keys) {
    if (!j.contains(k)) {
      throw IoError(std::string(context) + ": missing key '" + k + "'");
    }
  }
}

double parse_double(std::string_view field, const char* context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw IoError(std::string(context) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

long long parse_int(std::string_view field, const char* context) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw IoError(std::string(context) + ": bad integer '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

// Reads all lines, returning the first non-comment line (the header) and the
// data lines after it.
struct CsvBody {
  std::string header;
  std::vector<std::string> rows;
};

CsvBody read_csv_body(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  CsvBody body;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (body.header.empty()) {
      body.header = line;
    } else {
      body.rows.push_back(line);
    }
  }
  if (body.header.empty()) {
    throw IoError("'" + path.string() + "' has no header row");
  }
  return body;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    throw IoError("failed to format a floating-point value");
  }
  return std::string(buf, ptr);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t config_hash(const json& config) {
  return fnv1a64(config.dump());
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path parent = path.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) {
      throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
    }
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw IoError("failed while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() +
                  "': " + ec.message());
  }
}

json to_json(const CavityParams& params) {
  json j;
  j["gamma"] = params.gamma;
  j["rho_l"] = params.rho_l;
  j["kappa"] = params.kappa;
  j["fsr_hz"] = params.fsr_hz;
  j["f_res_hz"] = params.f_res_hz;
  j["t_all"] = params.t_all;
  j["theta_offset_rad"] = params.theta_offset_rad;
  return j;
}

json to_json(const GapCouplingLaw& law) {
  json j;
  j["kappa_0"] = law.kappa_0;
  j["decay_len_nm"] = law.decay_len_nm;
  return j;
}

json to_json(const ProbeModel& probe) {
  json j;
  j["power_w"] = probe.power_w;
  j["wavelength_m"] = probe.wavelength_m;
  j["pol_angle_deg"] = probe.pol_angle_deg;
  j["pol_phase_rad"] = probe.pol_phase_rad;
  return j;
}

json to_json(const DetectorModel& detector) {
  json j;
  j["efficiency"] = detector.efficiency;
  j["dark_rate_hz"] = detector.dark_rate_hz;
  j["bin_time_s"] = detector.bin_time_s;
  j["count_cap"] = detector.count_cap;
  return j;
}

json to_json(const SimOptions& options) {
  json j;
  j["mode"] = options.mode == CountingMode::Sequential ? "sequential" : "simultaneous";
  j["seed"] = options.seed;
  j["depol_strength"] = options.depol_strength;
  j["jitter_hz"] = options.jitter_hz;
  return j;
}

json to_json(const DensityMatrix& rho) {
  const auto entry = [](const std::complex<double>& z) {
    return json{{"re", z.real()}, {"im", z.imag()}};
  };
  json j;
  j["rho00"] = entry(rho.rho00);
  j["rho01"] = entry(rho.rho01);
  j["rho10"] = entry(rho.rho10);
  j["rho11"] = entry(rho.rho11);
  return j;
}

json to_json(const FitResult& fit) {
  json j;
  j["params"] = to_json(fit.params);
  j["resonance_offset_hz"] = fit.resonance_offset_hz;
  j["residual_rms"] = fit.residual_rms;
  j["param_stderr"] = {fit.param_stderr[0], fit.param_stderr[1], fit.param_stderr[2],
                       fit.param_stderr[3]};
  j["converged"] = fit.converged;
  j["degenerate"] = fit.degenerate;
  return j;
}

json to_json(const GapFitResult& fit) {
  json j;
  j["gap_law"] = to_json(fit.law);
  j["critical_gap_nm"] = fit.critical_gap_nm;
  j["critical_in_range"] = fit.critical_in_range;
  j["residual_rms"] = fit.residual_rms;
  j["converged"] = fit.converged;
  return j;
}

CavityParams cavity_from_json(const json& j) {
  require_keys(j, {"gamma", "rho_l", "kappa", "fsr_hz", "f_res_hz", "t_all",
                   "theta_offset_rad"},
               "cavity");
  CavityParams p;
  p.gamma = j.at("gamma").get<double>();
  p.rho_l = j.at("rho_l").get<double>();
  p.kappa = j.at("kappa").get<double>();
  p.fsr_hz = j.at("fsr_hz").get<double>();
  p.f_res_hz = j.at("f_res_hz").get<double>();
  p.t_all = j.at("t_all").get<double>();
  p.theta_offset_rad = j.at("theta_offset_rad").get<double>();
  return p;
}

GapCouplingLaw gap_law_from_json(const json& j) {
  require_keys(j, {"kappa_0", "decay_len_nm"}, "gap_law");
  GapCouplingLaw law;
  law.kappa_0 = j.at("kappa_0").get<double>();
  law.decay_len_nm = j.at("decay_len_nm").get<double>();
  return law;
}

ProbeModel probe_from_json(const json& j) {
  require_keys(j, {"power_w", "wavelength_m"}, "probe");
  ProbeModel p;
  p.power_w = j.at("power_w").get<double>();
  p.wavelength_m = j.at("wavelength_m").get<double>();
  if (j.contains("pol_angle_deg")) p.pol_angle_deg = j.at("pol_angle_deg").get<double>();
  if (j.contains("pol_phase_rad")) p.pol_phase_rad = j.at("pol_phase_rad").get<double>();
  return p;
}

DetectorModel detector_from_json(const json& j) {
  require_keys(j, {"efficiency", "dark_rate_hz", "bin_time_s"}, "detector");
  DetectorModel d;
  d.efficiency = j.at("efficiency").get<double>();
  d.dark_rate_hz = j.at("dark_rate_hz").get<double>();
  d.bin_time_s = j.at("bin_time_s").get<double>();
  if (j.contains("count_cap")) d.count_cap = j.at("count_cap").get<double>();
  return d;
}

SimOptions sim_options_from_json(const json& j) {
  SimOptions o;
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "sequential") {
      o.mode = CountingMode::Sequential;
    } else if (mode == "simultaneous") {
      o.mode = CountingMode::Simultaneous;
    } else {
      throw IoError("sim.mode must be 'sequential' or 'simultaneous'");
    }
  }
  if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("depol_strength")) o.depol_strength = j.at("depol_strength").get<double>();
  if (j.contains("jitter_hz")) o.jitter_hz = j.at("jitter_hz").get<double>();
  return o;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_sweep_record(const std::filesystem::path& csv_path, const SweepRecord& record,
                        const Provenance& prov) {
  if (record.counts.size() != record.detunings_hz.size()) {
    throw IoError("write_sweep_record: malformed record");
  }
  std::string body = header_lines("sweep-record", prov);
  body += "detuning_hz,counts_x,counts_y,counts_p,counts_m,counts_r,counts_l\n";
  for (std::size_t i = 0; i < record.detunings_hz.size(); ++i) {
    body += format_double(record.detunings_hz[i]);
    for (int b = 0; b < kNumBases; ++b) {
      body += ',';
      body += std::to_string(record.counts[i][b]);
    }
    body += '\n';
  }
  write_text_atomic(csv_path, body);

  json meta;
  meta["provenance"] = provenance_json(prov);
  meta["cavity"] = to_json(record.meta.params);
  meta["probe"] = to_json(record.meta.probe);
  meta["detector"] = to_json(record.meta.detector);
  meta["sim"] = to_json(record.meta.options);
  meta["compensated"] = record.meta.compensated;
  write_text_atomic(sidecar_path(csv_path), meta.dump(2) + "\n");
}

SweepRecord read_sweep_record(const std::filesystem::path& csv_path) {
  const CsvBody body = read_csv_body(csv_path);
  if (body.header != "detuning_hz,counts_x,counts_y,counts_p,counts_m,counts_r,counts_l") {
    throw IoError("'" + csv_path.string() + "' is not a sweep-record CSV");
  }
  SweepRecord record;
  for (const std::string& row : body.rows) {
    const auto fields = split_csv(row);
    if (fields.size() != 1 + kNumBases) {
      throw IoError("'" + csv_path.string() + "': wrong column count in row '" + row + "'");
    }
    record.detunings_hz.push_back(parse_double(fields[0], "sweep-record"));
    std::array<std::int64_t, kNumBases> counts{};
    for (int b = 0; b < kNumBases; ++b) {
      counts[b] = parse_int(fields[1 + b], "sweep-record");
    }
    record.counts.push_back(counts);
  }

  const std::filesystem::path meta_path = sidecar_path(csv_path);
  std::ifstream meta_in(meta_path);
  if (!meta_in) {
    throw IoError("missing sidecar '" + meta_path.string() + "'");
  }
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::parse_error& e) {
    throw IoError("cannot parse '" + meta_path.string() + "': " + e.what());
  }
  require_keys(meta, {"cavity", "probe", "detector", "sim"}, "sidecar");
  record.meta.params = cavity_from_json(meta.at("cavity"));
  record.meta.probe = probe_from_json(meta.at("probe"));
  record.meta.detector = detector_from_json(meta.at("detector"));
  record.meta.options = sim_options_from_json(meta.at("sim"));
  if (meta.contains("compensated")) {
    record.meta.compensated = meta.at("compensated").get<bool>();
  }
  return record;
}

void write_spectrum(const std::filesystem::path& path, std::string_view kind,
                    std::span<const SpectrumPoint> points, std::span<const int> flags,
                    const Provenance& prov) {
  if (!flags.empty() && flags.size() != points.size()) {
    throw IoError("write_spectrum: flag vector length mismatch");
  }
  std::string body = header_lines(kind, prov);
  body += "detuning_hz,value,flag\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    int flag = flags.empty() ? 0 : flags[i];
    body += format_double(points[i].detuning_hz);
    body += ',';
    if (std::isfinite(points[i].value)) {
      body += format_double(points[i].value);
    } else if (flag == 0) {
      flag = 1;
    }
    body += ',';
    body += std::to_string(flag);
    body += '\n';
  }
  write_text_atomic(path, body);
}

SpectrumFile read_spectrum(const std::filesystem::path& path) {
  const CsvBody body = read_csv_body(path);
  if (body.header != "detuning_hz,value,flag") {
    throw IoError("'" + path.string() + "' is not a spectrum CSV");
  }
  SpectrumFile out;
  for (const std::string& row : body.rows) {
    const auto fields = split_csv(row);
    if (fields.size() != 3) {
      throw IoError("'" + path.string() + "': wrong column count in row '" + row + "'");
    }
    SpectrumPoint pt;
    pt.detuning_hz = parse_double(fields[0], "spectrum");
    pt.value = fields[1].empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : parse_double(fields[1], "spectrum");
    out.points.push_back(pt);
    out.flags.push_back(static_cast<int>(parse_int(fields[2], "spectrum")));
  }
  return out;
}

void write_purity_spectrum(const std::filesystem::path& path,
                           std::span<const PurityPoint> points, const Provenance& prov) {
  std::string body = header_lines("purity-spectrum", prov);
  body += "detuning_hz,purity,s1/s0,s2/s0,s3/s0,convergence_flag\n";
  for (const auto& pt : points) {
    body += format_double(pt.detuning_hz);
    body += ',';
    if (std::isfinite(pt.purity)) body += format_double(pt.purity);
    for (int k = 0; k < 3; ++k) {
      body += ',';
      if (!pt.low_signal) body += format_double(pt.bloch[k]);
    }
    body += ',';
    // 0 = converged, 1 = not converged, 2 = low signal (skipped).
    body += std::to_string(pt.low_signal ? 2 : (pt.converged ? 0 : 1));
    body += '\n';
  }
  write_text_atomic(path, body);
}

void write_density_matrices(const std::filesystem::path& path,
                            std::span<const PurityPoint> points, const Provenance& prov) {
  json arr = json::array();
  for (const auto& pt : points) {
    json entry;
    entry["detuning_hz"] = pt.detuning_hz;
    entry["low_signal"] = pt.low_signal;
    entry["converged"] = pt.converged;
    if (!pt.low_signal) {
      entry["rho"] = to_json(pt.rho);
      entry["purity"] = pt.purity;
    }
    arr.push_back(entry);
  }
  json doc;
  doc["provenance"] = provenance_json(prov);
  doc["points"] = arr;
  write_text_atomic(path, doc.dump(2) + "\n");
}

void write_json(const std::filesystem::path& path, const json& body, const Provenance& prov) {
  json doc = body;
  doc["provenance"] = provenance_json(prov);
  write_text_atomic(path, doc.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("cannot parse '" + path.string() + "': " + e.what());
  }
}

void write_table(const std::filesystem::path& path, std::string_view kind,
                 std::string_view header, std::span<const std::string> rows,
                 const Provenance& prov) {
  std::string body = header_lines(kind, prov);
  body += header;
  body += '\n';
  for (const std::string& row : rows) {
    body += row;
    body += '\n';
  }
  write_text_atomic(path, body);
}

void write_gap_series(const std::filesystem::path& path, std::span<const GapPoint> points,
                      const Provenance& prov) {
  std::vector<std::string> rows;
  rows.reserve(points.size());
  for (const auto& p : points) {
    rows.push_back(format_double(p.gap_nm) + ',' + format_double(p.t_min) + ',' +
                   format_double(p.fwhm_hz));
  }
  write_table(path, "gap-series", "gap_nm,t_min,fwhm_hz", rows, prov);
}

std::vector<GapPoint> read_gap_series(const std::filesystem::path& path) {
  const CsvBody body = read_csv_body(path);
  if (body.header != "gap_nm,t_min,fwhm_hz") {
    throw IoError("'" + path.string() + "' is not a gap-series CSV");
  }
  std::vector<GapPoint> out;
  for (const std::string& row : body.rows) {
    const auto fields = split_csv(row);
    if (fields.size() != 3) {
      throw IoError("'" + path.string() + "': wrong column count in row '" + row + "'");
    }
    GapPoint p;
    p.gap_nm = parse_double(fields[0], "gap-series");
    p.t_min = parse_double(fields[1], "gap-series");
    p.fwhm_hz = parse_double(fields[2], "gap-series");
    out.push_back(p);
  }
  return out;
}

}  // namespace spherepol
