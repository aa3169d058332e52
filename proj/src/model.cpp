#include "cavdet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavdet/constants.hpp"

namespace cavdet {
namespace {

using constants::two_pi;

const std::vector<std::string> kKnownKeys = {
    "levels.gamma1_hz", "levels.gamma2_hz", "levels.gamma3_hz",
    "levels.gamma_total_hz", "levels.gamma_gg_hz", "levels.mu_ge_cm",
    "levels.mu_gpe_cm", "levels.wavelength_m", "cavity.kappa_t_hz",
    "cavity.kappa_r1_hz", "cavity.kappa_r1_fraction", "cavity.kappa_r2_hz",
    "cavity.kappa_r2_fraction", "cavity.length_m", "cavity.roc_m",
    "cavity.waist_m", "cavity.mode_volume_m3", "cavity.g0_hz",
    "drive.p_in_w", "drive.target_peak_p_out_w", "drive.delta_pc_hz",
    "drive.delta_pa_hz", "drive.delta_ra_hz", "drive.omega_control_hz",
    "drive.omega_units", "drive.flux_convention", "ensemble.n_total",
    "ensemble.n_c", "ensemble.cloud_sigma_x_m", "ensemble.cloud_sigma_y_m",
    "ensemble.cloud_sigma_z_m", "ensemble.cloud_center_x_m", "ensemble.cloud_center_y_m",
    "ensemble.cloud_center_z_m", "run.scan_start_hz", "run.scan_stop_hz",
    "run.scan_steps", "run.dwell_s", "run.eit_dwell_s",
    "run.vrs_scan_margin", "run.eit_span_fwhm", "run.settle_tolerance",
    "run.max_settle_s", "run.observe_s", "run.observe_samples",
    "run.cycles", "run.rtol", "run.atol",
};

// Collects issues instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(const Config& cfg) : cfg_(cfg) {}

  std::optional<double> number(const std::string& path) {
    try {
      return cfg_.get_double(path);
    } catch (const ConfigError& e) {
      fail(path, e.what());
      return std::nullopt;
    }
  }

  double number_or(const std::string& path, double fallback) { return number(path).value_or(fallback); }

  std::optional<double> required(const std::string& path) {
    if (!cfg_.has(path)) {
      fail(path, "missing required key '" + path + "'");
      return std::nullopt;
    }
    return number(path);
  }

  int integer_or(const std::string& path, int fallback) {
    const auto v = number(path);
    if (!v) return fallback;
    if (*v != std::floor(*v)) {
      fail(path, "must be an integer");
      return fallback;
    }
    return static_cast<int>(*v);
  }

  bool has(const std::string& path) const { return cfg_.has(path); }
  std::string text_or(const std::string& path, const std::string& fallback) const {
    return cfg_.get(path).value_or(fallback);
  }

  void conflict(const std::string& a, const std::string& b) {
    if (has(a) && has(b)) fail(a, "derivation conflict: '" + a + "' and '" + b + "' are both given");
  }

  void fail(const std::string& path, const std::string& message) { issues_.push_back({path, message}); }
  void warn(const std::string& message) { warnings_.push_back(message); }

  std::vector<ValidationIssue>& issues() { return issues_; }
  std::vector<std::string>& warnings() { return warnings_; }

 private:
  const Config& cfg_;
  std::vector<ValidationIssue> issues_;
  std::vector<std::string> warnings_;
};

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::ostringstream out;
  out << "invalid model:";
  for (const auto& i : issues) out << "\n  " << i.path << ": " << i.message;
  return out.str();
}

void read_levels(Reader& r, LevelScheme& lv) {
  // Default partial rates for Rb2 B(v=1) -> X(v=0, 1).
  lv.gamma1 = two_pi * r.number_or("levels.gamma1_hz", 401.5e3);
  lv.gamma2 = two_pi * r.number_or("levels.gamma2_hz", 456.6e3);
  r.conflict("levels.gamma3_hz", "levels.gamma_total_hz");
  if (r.has("levels.gamma3_hz")) {
    lv.gamma3 = two_pi * r.number_or("levels.gamma3_hz", 0.0);
  } else {
    const double total_hz = r.number_or("levels.gamma_total_hz", 6.44e6);
    lv.gamma3 = two_pi * total_hz - lv.gamma1 - lv.gamma2;
  }
  lv.gamma_gg = two_pi * r.number_or("levels.gamma_gg_hz", 0.0);
  lv.mu_ge = r.number_or("levels.mu_ge_cm", 4.8e-29);
  lv.mu_gpe = r.number_or("levels.mu_gpe_cm", 5.1e-29);
  lv.wavelength = r.number_or("levels.wavelength_m", 675e-9);

  if (lv.gamma1 < 0) r.fail("levels.gamma1_hz", "rate must be >= 0");
  if (lv.gamma2 < 0) r.fail("levels.gamma2_hz", "rate must be >= 0");
  if (lv.gamma3 < 0)
    r.fail(r.has("levels.gamma3_hz") ? "levels.gamma3_hz" : "levels.gamma_total_hz",
           "rate to the dark level must be >= 0 (total below gamma1 + gamma2?)");
  if (lv.gamma_gg < 0) r.fail("levels.gamma_gg_hz", "rate must be >= 0");
  if (!(lv.gamma_t() > 0)) r.fail("levels.gamma_total_hz", "total decay rate must be > 0");
  if (lv.mu_ge < 0) r.fail("levels.mu_ge_cm", "dipole must be >= 0");
  if (lv.mu_gpe < 0) r.fail("levels.mu_gpe_cm", "dipole must be >= 0");
  if (!(lv.wavelength > 0)) r.fail("levels.wavelength_m", "wavelength must be > 0");
}

void read_cavity(Reader& r, const LevelScheme& lv, CavityParams& cv) {
  const auto kappa_t_hz = r.required("cavity.kappa_t_hz");
  cv.kappa_t = two_pi * kappa_t_hz.value_or(0.0);
  if (!(cv.kappa_t > 0)) r.fail("cavity.kappa_t_hz", "total cavity decay rate must be > 0");

  auto mirror = [&](const char* hz_key, const char* frac_key, double default_fraction) {
    r.conflict(hz_key, frac_key);
    if (r.has(hz_key)) return two_pi * r.number_or(hz_key, 0.0);
    return r.number_or(frac_key, default_fraction) * cv.kappa_t;
  };
  cv.kappa_r1 = mirror("cavity.kappa_r1_hz", "cavity.kappa_r1_fraction", 0.1);
  cv.kappa_r2 = mirror("cavity.kappa_r2_hz", "cavity.kappa_r2_fraction", 0.8);
  if (cv.kappa_r1 < 0) r.fail("cavity.kappa_r1", "rate must be >= 0");
  if (cv.kappa_r2 < 0) r.fail("cavity.kappa_r2", "rate must be >= 0");
  if (cv.kappa_r1 + cv.kappa_r2 > cv.kappa_t * (1.0 + 1e-12))
    r.fail("cavity.kappa_r2", "mirror losses exceed total (kappa_r1 + kappa_r2 > kappa_t)");

  cv.length = r.number_or("cavity.length_m", 11.8e-3);
  cv.roc = r.number_or("cavity.roc_m", 10e-3);
  cv.omega_cv = two_pi * constants::speed_of_light / lv.wavelength;

  r.conflict("cavity.mode_volume_m3", "cavity.waist_m");
  const double waist_override = r.number_or("cavity.waist_m", 0.0);
  if (r.has("cavity.waist_m") && !(waist_override > 0)) r.fail("cavity.waist_m", "waist must be > 0");
  try {
    const ModeGeometry mode = mode_geometry(cv.length, cv.roc, lv.wavelength, waist_override);
    cv.waist = mode.waist;
    cv.mode_volume = mode.mode_volume;
  } catch (const GeometryError& e) {
    r.fail("cavity.length_m", e.what());
  }
  if (r.has("cavity.mode_volume_m3")) cv.mode_volume = r.number_or("cavity.mode_volume_m3", 0.0);
  if (!(cv.mode_volume > 0) && (cv.length > 0 && cv.length < 2 * cv.roc))
    r.fail("cavity.mode_volume_m3", "mode volume must be > 0");

  if (lv.mu_ge > 0 && cv.mode_volume > 0) cv.g0_from_dipole = coupling_g0(lv.mu_ge, cv.omega_cv, cv.mode_volume);
  if (r.has("cavity.g0_hz")) {
    cv.g0 = two_pi * r.number_or("cavity.g0_hz", 0.0);
  } else {
    if (!(lv.mu_ge > 0)) r.fail("levels.mu_ge_cm", "mu_ge must be > 0 when g0 is derived from it");
    cv.g0 = cv.g0_from_dipole;
    r.warn("g0 derived from mu_ge and mode volume: g0/2pi = " + format_double(cv.g0 / two_pi) + " Hz");
  }
  if (!(cv.g0 > 0)) r.fail("cavity.g0_hz", "g0 must be > 0");
}

void read_drive(Reader& r, const LevelScheme& lv, const CavityParams& cv, DriveParams& dr) {
  const std::string convention = r.text_or("drive.flux_convention", "field");
  if (convention == "field") {
    dr.flux_convention = FluxConvention::field;
  } else if (convention == "energy") {
    dr.flux_convention = FluxConvention::energy;
  } else {
    r.fail("drive.flux_convention", "expected 'field' or 'energy', got '" + convention + "'");
  }

  r.conflict("drive.p_in_w", "drive.target_peak_p_out_w");
  if (r.has("drive.target_peak_p_out_w")) {
    dr.target_peak_p_out = r.number_or("drive.target_peak_p_out_w", 0.0);
    if (!(*dr.target_peak_p_out > 0)) r.fail("drive.target_peak_p_out_w", "target output power must be > 0");
  } else if (r.has("drive.p_in_w")) {
    dr.p_in = r.number_or("drive.p_in_w", 0.0);
    if (dr.p_in < 0) r.fail("drive.p_in_w", "input power must be >= 0");
    if (dr.p_in >= 0 && lv.wavelength > 0 && cv.kappa_r1 >= 0)
      dr.eta = eta_from_input(dr.p_in, cv.kappa_r1, lv.wavelength, dr.flux_convention);
  } else {
    r.fail("drive.p_in_w", "missing required key 'drive.p_in_w' (or 'drive.target_peak_p_out_w')");
  }

  dr.delta_pc = two_pi * r.number_or("drive.delta_pc_hz", 0.0);
  dr.delta_pa = two_pi * r.number_or("drive.delta_pa_hz", 0.0);
  dr.delta_ra = two_pi * r.number_or("drive.delta_ra_hz", 0.0);

  // The control strength is ordinary frequency by default; 'rad_per_s'
  // takes the number as angular already.
  const double omega_raw = r.number_or("drive.omega_control_hz", 0.0);
  const std::string units = r.text_or("drive.omega_units", "hz");
  if (units == "hz") {
    dr.omega_control = two_pi * omega_raw;
  } else if (units == "rad_per_s") {
    dr.omega_control = omega_raw;
  } else {
    r.fail("drive.omega_units", "expected 'hz' or 'rad_per_s', got '" + units + "'");
  }
  if (dr.omega_control < 0) r.fail("drive.omega_control_hz", "control strength must be >= 0");
}

void read_ensemble(Reader& r, const LevelScheme& lv, const CavityParams& cv, EnsembleParams& en) {
  const bool has_cloud = r.has("ensemble.cloud_sigma_x_m") || r.has("ensemble.cloud_sigma_y_m") ||
                         r.has("ensemble.cloud_sigma_z_m");
  if (r.has("ensemble.n_c") && has_cloud)
    r.fail("ensemble.n_c", "derivation conflict: 'ensemble.n_c' and cloud sigmas are both given");

  if (has_cloud) {
    CloudProfile cloud;
    const char* sig[3] = {"ensemble.cloud_sigma_x_m", "ensemble.cloud_sigma_y_m", "ensemble.cloud_sigma_z_m"};
    const char* ctr[3] = {"ensemble.cloud_center_x_m", "ensemble.cloud_center_y_m", "ensemble.cloud_center_z_m"};
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      const auto s = r.required(sig[i]);
      cloud.sigmas[i] = s.value_or(0.0);
      if (s && !(*s > 0)) {
        r.fail(sig[i], "cloud sigma must be > 0");
        ok = false;
      }
      ok = ok && s.has_value();
      cloud.center[i] = r.number_or(ctr[i], 0.0);
    }
    const auto n_total = r.required("ensemble.n_total");
    en.n_total = n_total.value_or(0.0);
    en.cloud = cloud;
    if (ok && n_total && cv.waist > 0 && cv.length > 0) {
      const ModeGeometry mode = mode_geometry(cv.length, cv.roc, lv.wavelength, cv.waist);
      const double overlap = mode_overlap(cloud, mode);
      if (overlap < 1e-9) r.warn("cloud barely overlaps the cavity mode: <f^2> = " + format_double(overlap));
      en.n_c = en.n_total * overlap;
    }
  } else {
    const auto n_c = r.required("ensemble.n_c");
    en.n_c = n_c.value_or(0.0);
    en.n_total = r.number_or("ensemble.n_total", en.n_c);
  }
  if (en.n_total < 0) r.fail("ensemble.n_total", "molecule number must be >= 0");
  if (en.n_c < 0) r.fail("ensemble.n_c", "effective molecule number must be >= 0");
  if (en.n_c > en.n_total * (1.0 + 1e-12)) r.fail("ensemble.n_c", "N_c exceeds n_total");
}

void read_run(Reader& r, RunParams& run) {
  const bool start = r.has("run.scan_start_hz");
  const bool stop = r.has("run.scan_stop_hz");
  if (start != stop) r.fail(start ? "run.scan_stop_hz" : "run.scan_start_hz", "scan bounds must be given together");
  if (start && stop) {
    run.scan_start = two_pi * r.number_or("run.scan_start_hz", 0.0);
    run.scan_stop = two_pi * r.number_or("run.scan_stop_hz", 0.0);
    if (!(*run.scan_stop > *run.scan_start)) r.fail("run.scan_stop_hz", "scan must run to increasing detuning");
  }
  run.scan_steps = r.integer_or("run.scan_steps", run.scan_steps);
  run.dwell = r.number_or("run.dwell_s", run.dwell);
  run.eit_dwell = r.number_or("run.eit_dwell_s", run.eit_dwell);
  run.vrs_scan_margin = r.number_or("run.vrs_scan_margin", run.vrs_scan_margin);
  run.eit_span_fwhm = r.number_or("run.eit_span_fwhm", run.eit_span_fwhm);
  run.settle_tolerance = r.number_or("run.settle_tolerance", run.settle_tolerance);
  run.max_settle = r.number_or("run.max_settle_s", run.max_settle);
  if (r.has("run.observe_s")) run.observe_duration = r.number_or("run.observe_s", 0.0);
  run.observe_samples = r.integer_or("run.observe_samples", run.observe_samples);
  run.cycles = r.integer_or("run.cycles", run.cycles);
  run.rtol = r.number_or("run.rtol", run.rtol);
  run.atol = r.number_or("run.atol", run.atol);

  if (run.scan_steps < 2) r.fail("run.scan_steps", "need at least 2 scan steps");
  if (!(run.dwell > 0)) r.fail("run.dwell_s", "dwell must be > 0");
  if (!(run.eit_dwell > 0)) r.fail("run.eit_dwell_s", "dwell must be > 0");
  if (!(run.vrs_scan_margin >= 1.25)) r.fail("run.vrs_scan_margin", "span must exceed the VRS peaks by >= 25%");
  if (!(run.eit_span_fwhm > 0)) r.fail("run.eit_span_fwhm", "must be > 0");
  if (!(run.settle_tolerance > 0)) r.fail("run.settle_tolerance", "tolerance must be > 0");
  if (!(run.max_settle > 0)) r.fail("run.max_settle_s", "must be > 0");
  if (run.observe_duration && !(*run.observe_duration > 0)) r.fail("run.observe_s", "must be > 0");
  if (run.observe_samples < 10) r.fail("run.observe_samples", "need at least 10 samples");
  if (run.cycles < 1) r.fail("run.cycles", "need at least one cycle");
  if (!(run.rtol > 0) || !(run.atol > 0)) r.fail("run.rtol", "integrator tolerances must be > 0");
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

const std::vector<std::string>& known_keys() { return kKnownKeys; }

Model validate(const Config& config) {
  Reader r(config);
  for (const auto& [path, value] : config.entries()) {
    (void)value;
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), path) == kKnownKeys.end())
      r.fail(path, "unknown key '" + path + "'");
  }

  Model model;
  model.source = config;
  read_levels(r, model.levels);
  read_cavity(r, model.levels, model.cavity);
  read_drive(r, model.levels, model.cavity, model.drive);
  read_ensemble(r, model.levels, model.cavity, model.ensemble);
  read_run(r, model.run);

  if (!r.issues().empty()) throw ValidationError(std::move(r.issues()));
  model.warnings = std::move(r.warnings());
  return model;
}

Model validate(const Model& model) { return validate(model.source); }

}  // namespace cavdet
