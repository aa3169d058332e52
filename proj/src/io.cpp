#include "cavdet/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "cavdet/analytics.hpp"
#include "cavdet/constants.hpp"
#include "cavdet/dynamics.hpp"
#include "cavdet/integrator.hpp"

namespace cavdet::io {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

double hz(double angular) { return angular / constants::two_pi; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string config_hash(const Config& config) {
  // FNV-1a over the canonical INI text.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.to_ini()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 8);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

// Creates the run directory; auto-generated ids get a numeric suffix on collision.
fs::path claim_directory(const fs::path& root, std::string& run_id, bool explicit_id) {
  fs::create_directories(root);
  if (explicit_id) {
    const fs::path dir = root / run_id;
    if (!fs::create_directory(dir)) throw ConfigError("run directory '" + dir.string() + "' already exists");
    return dir;
  }
  const std::string base = run_id;
  for (int n = 1;; ++n) {
    const fs::path dir = root / run_id;
    if (fs::create_directory(dir)) return dir;
    run_id = base + "-" + std::to_string(n);
  }
}

json stats_json(const IntegratorStats& s) {
  return {{"accepted", s.accepted}, {"rejected", s.rejected}, {"evaluations", s.evaluations}};
}

json scan_json(const ScanSpec& spec) {
  return {{"start_hz", hz(spec.start)},
          {"stop_hz", hz(spec.stop)},
          {"steps", spec.steps},
          {"dwell_s", spec.dwell},
          {"duration_s", spec.duration()},
          {"rate_hz_per_s", hz(spec.scan_rate())},
          {"atom_cavity_offset_hz", hz(spec.atom_cavity_offset)},
          {"delta_ra_hz", hz(spec.delta_ra)}};
}

json fit_error_json(const FitError& e) { return {{"error", e.what()}}; }

// Fields shared by both scan summaries.
json scan_summary(const Model& model, const ScanResult& scan) {
  double peak_p = 0.0, peak_n = 0.0;
  for (const auto& p : scan.points) {
    peak_p = std::max(peak_p, p.p_out);
    peak_n = std::max(peak_n, p.n_bar);
  }
  json peaks = json::array();
  if (scan.points.size() >= 5) {
    for (const auto& p : find_peaks(scan))
      peaks.push_back({{"detuning_hz", hz(p.position)}, {"p_out_w", p.height}, {"prominence_w", p.prominence}});
  }
  const LossReport loss = loss_fraction(scan, model.ensemble.n_c);
  return {{"kind", scan.scheme == Scheme::vrs ? "vrs-scan" : "eit-scan"},
          {"n_c", model.ensemble.n_c},
          {"p_in_w", scan.p_in},
          {"eta_per_s", scan.eta},
          {"peak_p_out_w", peak_p},
          {"peak_n_bar", peak_n},
          {"peaks", peaks},
          {"peak_count", peaks.size()},
          {"loss",
           {{"dark_fraction", loss.dark_fraction},
            {"molecules_lost", loss.molecules_lost},
            {"rho_gp", loss.rho_gp},
            {"rho_gpp", loss.rho_gpp}}},
          {"scan", scan_json(scan.spec)},
          {"max_trace_error", scan.max_trace_error},
          {"integrator", stats_json(scan.stats)}};
}

void add_vrs_fields(const Model& model, const ScanResult& scan, json& out) {
  const double formula = vrs_splitting(model.cavity.g0, model.ensemble.n_c);
  out["splitting_formula_hz"] = hz(formula);
  out["splitting_hz"] = nullptr;
  out["splitting_ratio"] = nullptr;
  if (scan.points.size() < 5) return;
  auto peaks = find_peaks(scan);
  if (peaks.size() < 2) return;
  // The two normal modes are the two most prominent maxima.
  std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(),
                    [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
  const double split = std::abs(peaks[1].position - peaks[0].position);
  out["splitting_hz"] = hz(split);
  if (formula > 0) out["splitting_ratio"] = split / formula;
}

void add_eit_fields(const Model& model, const ScanResult& scan, json& out) {
  const auto exact = eit_fwhm(model.cavity.g0, model.ensemble.n_c, model.drive.omega_control, model.cavity.kappa_t,
                              model.levels.gamma_t(), FwhmForm::exact);
  const auto simple = eit_fwhm(model.cavity.g0, model.ensemble.n_c, model.drive.omega_control, model.cavity.kappa_t,
                               model.levels.gamma_t(), FwhmForm::simplified);
  out["fwhm_exact_hz"] = hz(exact.width);
  out["fwhm_simplified_hz"] = hz(simple.width);
  out["simplified_validity_ratio"] = simple.validity_ratio;
  out["simplified_outside_validity"] = simple.outside_validity;
  try {
    const FitReport fit = fit_lorentzian(scan);
    out["fit"] = {{"center_hz", hz(fit.center)},
                  {"fwhm_hz", hz(fit.fwhm)},
                  {"amplitude_w", fit.amplitude},
                  {"residual_norm", fit.residual_norm},
                  {"large_residual", fit.large_residual},
                  {"iterations", fit.iterations}};
    out["fit_over_exact"] = exact.width > 0 ? json(fit.fwhm / exact.width) : json(nullptr);
    out["fit_over_simplified"] = simple.width > 0 ? json(fit.fwhm / simple.width) : json(nullptr);
  } catch (const FitError& e) {
    out["fit"] = fit_error_json(e);
  }
}

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format_csv(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Looks up a dotted path in a summary; null when absent.
json lookup(const json& root, const std::string& path) {
  const json* node = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &node->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return *node;
}

const std::vector<std::pair<std::string, std::string>> kAggregateColumns = {
    {"loss_fraction", "loss.dark_fraction"},
    {"molecules_lost", "loss.molecules_lost"},
    {"cumulative_loss", "loss.cumulative_final"},
    {"p_in_w", "p_in_w"},
    {"peak_p_out_w", "peak_p_out_w"},
    {"peak_n_bar", "peak_n_bar"},
    {"splitting_hz", "splitting_hz"},
    {"splitting_formula_hz", "splitting_formula_hz"},
    {"fwhm_fit_hz", "fit.fwhm_hz"},
    {"fwhm_exact_hz", "fwhm_exact_hz"},
    {"fwhm_simplified_hz", "fwhm_simplified_hz"},
    {"rate_fit_per_s", "fit.rate_per_s"},
    {"rate_simplified_per_s", "rate_simplified_per_s"},
};

std::string axis_value_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_double(v.get<double>());
  throw ConfigError("sweep axis values must be numbers or strings, got " + v.dump());
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::vrs_scan: return "vrs-scan";
    case Command::eit_scan: return "eit-scan";
    case Command::ringdown: return "ringdown";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  if (name == "vrs-scan") return Command::vrs_scan;
  if (name == "eit-scan") return Command::eit_scan;
  if (name == "ringdown") return Command::ringdown;
  throw ConfigError("unknown command '" + name + "' (expected vrs-scan, eit-scan or ringdown)");
}

ExitCode exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const GeometryError*>(&error) ||
      dynamic_cast<const json::exception*>(&error))
    return ExitCode::config_error;
  return ExitCode::numerical_failure;
}

Config load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  Config config = Config::load(path.string());
  for (const auto& o : overrides) config.apply_override(o);
  return config;
}

std::string format_csv(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  const bool eit = scan.scheme == Scheme::eit;
  out << "detuning_hz,p_out_w,n_bar,rho_g,rho_e,rho_gp" << (eit ? ",rho_gpp" : "") << "\n";
  for (const auto& p : scan.points) {
    out << format_csv(hz(p.detuning)) << ',' << format_csv(p.p_out) << ',' << format_csv(p.n_bar) << ','
        << format_csv(p.rho_gg) << ',' << format_csv(p.rho_ee) << ',' << format_csv(p.rho_gpgp);
    if (eit) out << ',' << format_csv(p.rho_gpp);
    out << "\n";
  }
}

void write_ringdown_csv(std::ostream& out, const RingdownResult& ringdown) {
  out << "t_s,p_out_w,p_out_sum_w\n";
  for (std::size_t k = 0; k < ringdown.t.size(); ++k)
    out << format_csv(ringdown.t[k]) << ',' << format_csv(ringdown.p_out[k]) << ','
        << format_csv(ringdown.p_out_accumulated[k]) << "\n";
}

json derived_values(const Model& m) {
  const auto exact = eit_fwhm(m.cavity.g0, m.ensemble.n_c, m.drive.omega_control, m.cavity.kappa_t,
                              m.levels.gamma_t(), FwhmForm::exact);
  const auto simple = eit_fwhm(m.cavity.g0, m.ensemble.n_c, m.drive.omega_control, m.cavity.kappa_t,
                               m.levels.gamma_t(), FwhmForm::simplified);
  json drive = {{"p_in_w", m.drive.p_in},
                {"eta_per_s", m.drive.eta},
                {"delta_pc_hz", hz(m.drive.delta_pc)},
                {"delta_pa_hz", hz(m.drive.delta_pa)},
                {"delta_ra_hz", hz(m.drive.delta_ra)},
                {"omega_control_hz", hz(m.drive.omega_control)},
                {"target_peak_p_out_w", nullptr}};
  if (m.drive.target_peak_p_out) drive["target_peak_p_out_w"] = *m.drive.target_peak_p_out;
  json ensemble = {{"n_c", m.ensemble.n_c}, {"n_total", m.ensemble.n_total}};
  if (m.ensemble.cloud) {
    ensemble["cloud_sigmas_m"] = m.ensemble.cloud->sigmas;
    ensemble["cloud_center_m"] = m.ensemble.cloud->center;
  }
  json run = {{"scan_steps", m.run.scan_steps},
              {"dwell_s", m.run.dwell},
              {"eit_dwell_s", m.run.eit_dwell},
              {"vrs_scan_margin", m.run.vrs_scan_margin},
              {"eit_span_fwhm", m.run.eit_span_fwhm},
              {"settle_tolerance", m.run.settle_tolerance},
              {"max_settle_s", m.run.max_settle},
              {"observe_s", default_observe_duration(m)},
              {"observe_samples", m.run.observe_samples},
              {"cycles", m.run.cycles},
              {"rtol", m.run.rtol},
              {"atol", m.run.atol}};
  if (m.run.scan_start) {
    run["scan_start_hz"] = hz(*m.run.scan_start);
    run["scan_stop_hz"] = hz(*m.run.scan_stop);
  }
  return {{"levels",
           {{"gamma1_hz", hz(m.levels.gamma1)},
            {"gamma2_hz", hz(m.levels.gamma2)},
            {"gamma3_hz", hz(m.levels.gamma3)},
            {"gamma_total_hz", hz(m.levels.gamma_t())},
            {"gamma_gg_hz", hz(m.levels.gamma_gg)},
            {"mu_ge_cm", m.levels.mu_ge},
            {"mu_gpe_cm", m.levels.mu_gpe},
            {"wavelength_m", m.levels.wavelength}}},
          {"cavity",
           {{"kappa_t_hz", hz(m.cavity.kappa_t)},
            {"kappa_r1_hz", hz(m.cavity.kappa_r1)},
            {"kappa_r2_hz", hz(m.cavity.kappa_r2)},
            {"length_m", m.cavity.length},
            {"roc_m", m.cavity.roc},
            {"waist_m", m.cavity.waist},
            {"mode_volume_m3", m.cavity.mode_volume},
            {"g0_hz", hz(m.cavity.g0)},
            {"g0_from_dipole_hz", hz(m.cavity.g0_from_dipole)},
            {"omega_cavity_hz", hz(m.cavity.omega_cv)}}},
          {"drive", drive},
          {"ensemble", ensemble},
          {"run", run},
          {"closed_form",
           {{"vrs_splitting_hz", hz(vrs_splitting(m.cavity.g0, m.ensemble.n_c))},
            {"eit_fwhm_exact_hz", hz(exact.width)},
            {"eit_fwhm_simplified_hz", hz(simple.width)},
            {"simplified_validity_ratio", simple.validity_ratio}}}};
}

json summarize(const Model& model, const ScanResult& scan) {
  json out = scan_summary(model, scan);
  if (scan.scheme == Scheme::vrs)
    add_vrs_fields(model, scan, out);
  else
    add_eit_fields(model, scan, out);
  return out;
}

json summarize(const Model& model, const RingdownResult& r) {
  const LossReport loss = loss_fraction(r, model.ensemble.n_c);
  json out = {{"kind", "ringdown"},
              {"n_c", model.ensemble.n_c},
              {"p_in_w", r.p_in},
              {"eta_per_s", r.eta},
              {"p_out_steady_w", r.p_out_steady},
              {"cycles", r.settle_times.size()},
              {"settle_times_s", r.settle_times},
              {"observe_s", r.t.empty() ? 0.0 : r.t.back()},
              {"samples", r.t.size()},
              {"empty_cavity_rate_per_s", 2.0 * model.cavity.kappa_t},
              {"loss",
               {{"dark_fraction", loss.dark_fraction},
                {"molecules_lost", loss.molecules_lost},
                {"per_cycle", loss.per_cycle},
                {"cumulative", loss.cumulative},
                {"cumulative_final", loss.cumulative.empty() ? 0.0 : loss.cumulative.back()}}},
              {"max_trace_error", r.max_trace_error},
              {"integrator", stats_json(r.stats)}};
  // A Lorentzian of FWHM 2d rings down as exp(-2d t) in power.
  out["rate_exact_per_s"] = nullptr;
  out["rate_simplified_per_s"] = nullptr;
  if (model.drive.omega_control > 0) {
    out["rate_exact_per_s"] = eit_fwhm(model.cavity.g0, model.ensemble.n_c, model.drive.omega_control,
                                     model.cavity.kappa_t, model.levels.gamma_t(), FwhmForm::exact)
                                .width;
    out["rate_simplified_per_s"] = eit_fwhm(model.cavity.g0, model.ensemble.n_c, model.drive.omega_control,
                                      model.cavity.kappa_t, model.levels.gamma_t(), FwhmForm::simplified)
                                 .width;
  }
  try {
    const FitReport fit = fit_exponential(r);
    out["fit"] = {{"rate_per_s", fit.rate},
                  {"amplitude_w", fit.amplitude},
                  {"residual_norm", fit.residual_norm},
                  {"large_residual", fit.large_residual},
                  {"samples_used", fit.samples_used},
                  {"truncated", fit.truncated},
                  {"window_end_s", fit.window_end},
                  {"decay_constants_covered", fit.decay_constants_covered}};
    out["fit_over_simplified"] = out["rate_simplified_per_s"].is_null() ? json(nullptr)
                                                            : json(fit.rate / out["rate_simplified_per_s"].get<double>());
    out["fit_over_empty_cavity"] = fit.rate / (2.0 * model.cavity.kappa_t);
  } catch (const FitError& e) {
    out["fit"] = fit_error_json(e);
  }
  return out;
}

RunOutput execute(Command command, const Model& model, const RunOptions& options) {
  RunOutput result;
  json scan_spec = nullptr;
  std::ostringstream csv;
  switch (command) {
    case Command::vrs_scan:
    case Command::eit_scan: {
      const ScanSpec spec = command == Command::vrs_scan ? default_vrs_scan(model) : default_eit_scan(model);
      const ScanResult scan = command == Command::vrs_scan ? run_vrs_scan(model, spec) : run_eit_scan(model, spec);
      write_scan_csv(csv, scan);
      result.summary = summarize(model, scan);
      scan_spec = scan_json(spec);
      break;
    }
    case Command::ringdown: {
      const RingdownResult rd = run_ringdown(model, SteadyStateCriterion::from_model(model),
                                             default_observe_duration(model), model.run.cycles);
      write_ringdown_csv(csv, rd);
      result.summary = summarize(model, rd);
      break;
    }
  }

  // Only claim a directory once the run has succeeded.
  const bool explicit_id = !options.run_id.empty();
  result.run_id = explicit_id ? options.run_id
                              : to_string(command) + "-" + config_hash(model.source);
  result.dir = claim_directory(options.runs_dir, result.run_id, explicit_id);

  result.manifest = {{"run_id", result.run_id},
                     {"timestamp", utc_timestamp()},
                     {"tool", kToolName},
                     {"version", kVersion},
                     {"command", to_string(command)},
                     {"config", model.source.entries()},
                     {"derived", derived_values(model)},
                     {"scan", scan_spec},
                     {"conventions",
                      {{"flux_convention",
                        model.drive.flux_convention == FluxConvention::field ? "field" : "energy"},
                       {"file_frequencies", "Hz (ordinary); internal rates are angular"},
                       {"decay_rates", "per second, for power"},
                       {"coherences", "rho_mn = <|m><n|>"},
                       {"eta_calibration", model.drive.target_peak_p_out ? "target_peak_p_out" : "p_in"}}},
                     {"files", {{"data", "scan.csv"}, {"summary", "summary.json"}, {"manifest", "manifest.json"}}},
                     {"warnings", model.warnings}};
  write_text(result.dir / "scan.csv", csv.str());
  write_json(result.dir / "summary.json", result.summary);
  write_json(result.dir / "manifest.json", result.manifest);
  return result;
}

RunOutput rerun(const fs::path& manifest_path, const RunOptions& options) {
  const json manifest = read_json(manifest_path);
  if (!manifest.contains("command") || !manifest.contains("config"))
    throw ConfigError("'" + manifest_path.string() + "' is not a run manifest");
  const Command command = parse_command(manifest.at("command").get<std::string>());
  Config config;
  for (const auto& [key, value] : manifest.at("config").items()) config.set(key, value.get<std::string>());
  const Model model = validate(config);
  if (manifest.contains("derived") && manifest.at("derived") != derived_values(model))
    throw ConfigError("manifest derived values differ from this build's; results would not reproduce");
  return execute(command, model, options);
}

std::size_t SweepSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::vector<std::string> SweepSpec::point(std::size_t index) const {
  std::vector<std::string> out(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto& axis = axes[k];
    out[k] = axis.path + "=" + axis.values[index % axis.values.size()];
    index /= axis.values.size();
  }
  return out;
}

SweepSpec parse_sweep(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("sweep spec must be a JSON object");
  SweepSpec spec;
  spec.name = j.value("name", spec.name);
  if (spec.name.empty() || spec.name.find('/') != std::string::npos)
    throw ConfigError("sweep name must be a non-empty plain directory name");
  spec.command = parse_command(j.value("command", std::string("vrs-scan")));
  if (!j.contains("config")) throw ConfigError("sweep spec: missing required key 'config'");
  spec.base_config = j.at("config").get<std::string>();
  if (spec.base_config.is_relative()) spec.base_config = base_dir / spec.base_config;

  if (j.contains("overrides")) {
    const json& o = j.at("overrides");
    if (o.is_array()) {
      for (const auto& v : o) spec.overrides.push_back(v.get<std::string>());
    } else if (o.is_object()) {
      for (const auto& [k, v] : o.items()) spec.overrides.push_back(k + "=" + axis_value_text(v));
    } else {
      throw ConfigError("sweep spec: 'overrides' must be an array or object");
    }
  }

  if (!j.contains("axes") || !j.at("axes").is_array() || j.at("axes").empty())
    throw ConfigError("sweep spec: 'axes' must be a non-empty array");
  const auto& known = known_keys();
  for (const auto& a : j.at("axes")) {
    SweepAxis axis;
    axis.path = a.at("path").get<std::string>();
    if (std::find(known.begin(), known.end(), axis.path) == known.end())
      throw ConfigError("sweep axis: unknown parameter path '" + axis.path + "'");
    for (const auto& v : a.at("values")) axis.values.push_back(axis_value_text(v));
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.path + "' has no values");
    spec.axes.push_back(std::move(axis));
  }
  spec.parallelism = j.value("parallelism", 1);
  if (spec.parallelism < 1) throw ConfigError("sweep spec: parallelism must be >= 1");
  return spec;
}

SweepSpec load_sweep(const fs::path& path) { return parse_sweep(read_json(path), path.parent_path()); }

SweepReport run_sweep(const SweepSpec& spec, const RunOptions& options) {
  SweepReport report;
  report.points = spec.size();
  std::string dir_name = spec.name;
  report.dir = claim_directory(options.runs_dir, dir_name, false);
  const fs::path points_dir = report.dir / "points";
  fs::create_directories(points_dir);

  json axes = json::array();
  for (const auto& a : spec.axes) axes.push_back({{"path", a.path}, {"values", a.values}});
  write_json(report.dir / "sweep.json", {{"name", spec.name},
                                         {"command", to_string(spec.command)},
                                         {"config", spec.base_config.string()},
                                         {"overrides", spec.overrides},
                                         {"axes", axes},
                                         {"parallelism", spec.parallelism},
                                         {"points", report.points},
                                         {"version", kVersion}});

  struct Slot {
    std::optional<json> summary;
    std::optional<SweepFailure> failure;
  };
  std::vector<Slot> slots(report.points);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < report.points; i = next++) {
      char id[16];
      std::snprintf(id, sizeof id, "p%04zu", i);
      try {
        std::vector<std::string> overrides = spec.overrides;
        for (auto& o : spec.point(i)) overrides.push_back(std::move(o));
        const Model model = validate(load_config(spec.base_config, overrides));
        slots[i].summary = execute(spec.command, model, {points_dir, id}).summary;
      } catch (const std::exception& e) {
        slots[i].failure = SweepFailure{i, exit_code_for(e), e.what()};
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::min<std::size_t>(spec.parallelism, report.points));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "index";
  for (const auto& a : spec.axes) csv << ',' << a.path;
  for (const auto& [column, path] : kAggregateColumns) csv << ',' << column;
  csv << "\n";
  json failures = json::array();
  for (std::size_t i = 0; i < report.points; ++i) {
    if (slots[i].failure) {
      const auto& f = *slots[i].failure;
      report.failures.push_back(f);
      failures.push_back({{"index", f.index}, {"exit_code", static_cast<int>(f.code)}, {"message", f.message}});
      continue;
    }
    csv << i;
    for (const auto& o : spec.point(i)) csv << ',' << o.substr(o.find('=') + 1);
    for (const auto& [column, path] : kAggregateColumns) csv << ',' << cell(lookup(*slots[i].summary, path));
    csv << "\n";
  }
  write_text(report.dir / "aggregate.csv", csv.str());
  write_json(report.dir / "failures.json", failures);
  return report;
}

}  // namespace cavdet::io
