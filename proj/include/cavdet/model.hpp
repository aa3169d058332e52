#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavdet/config.hpp"
#include "cavdet/physparams.hpp"

namespace cavdet {

// All rates and detunings below are angular (rad/s). The configuration file
// carries ordinary frequencies in Hz; validate() multiplies by 2*pi once.

/// Effective molecule: |g> (detected), |g'> (control-coupled), |g''> (dark), |e>.
struct LevelScheme {
  double gamma1 = 0.0;    // |e> -> |g>
  double gamma2 = 0.0;    // |e> -> |g'>
  double gamma3 = 0.0;    // |e> -> |g''>, every other ground level
  double gamma_gg = 0.0;  // ground-state decoherence
  double mu_ge = 0.0;     // C m
  double mu_gpe = 0.0;    // C m
  double wavelength = 0.0;  // m

  [[nodiscard]] double gamma_t() const { return gamma1 + gamma2 + gamma3; }
  /// Decay from |e> to anything but |g>; the single dark level of the 3-level scheme.
  [[nodiscard]] double gamma_dark() const { return gamma2 + gamma3; }

  bool operator==(const LevelScheme&) const = default;
};

struct CavityParams {
  double kappa_t = 0.0;
  double kappa_r1 = 0.0;
  double kappa_r2 = 0.0;
  double length = 0.0;  // m
  double roc = 0.0;     // m
  double waist = 0.0;   // m
  double mode_volume = 0.0;  // m^3
  double g0 = 0.0;
  /// g0 evaluated from mu_ge and the mode volume, kept for comparison when
  /// g0 is given explicitly. Zero when mu_ge is zero.
  double g0_from_dipole = 0.0;
  double omega_cv = 0.0;

  bool operator==(const CavityParams&) const = default;
};

struct DriveParams {
  double p_in = 0.0;  // W
  double eta = 0.0;
  /// When set, p_in/eta are chosen per run so the peak output power equals this (W).
  std::optional<double> target_peak_p_out;
  double delta_pc = 0.0;
  double delta_pa = 0.0;
  double delta_ra = 0.0;
  double omega_control = 0.0;
  FluxConvention flux_convention = FluxConvention::field;

  bool operator==(const DriveParams&) const = default;
};

struct EnsembleParams {
  double n_total = 0.0;
  double n_c = 0.0;
  std::optional<CloudProfile> cloud;

  bool operator==(const EnsembleParams& o) const {
    const bool same_cloud = cloud.has_value() == o.cloud.has_value() &&
                            (!cloud || (cloud->sigmas == o.cloud->sigmas && cloud->center == o.cloud->center));
    return n_total == o.n_total && n_c == o.n_c && same_cloud;
  }
};

/// Numerical and protocol settings.
struct RunParams {
  std::optional<double> scan_start;  // Delta_pc at the first step
  std::optional<double> scan_stop;
  int scan_steps = 200;
  double dwell = 5e-7;      // s, VRS scans
  double eit_dwell = 5e-6;  // s, EIT scans take longer to settle
  /// Auto VRS span: half-width = margin * g0 sqrt(N_c).
  double vrs_scan_margin = 4.0;
  /// Auto EIT span: half-width = this many FWHM (exact form).
  double eit_span_fwhm = 3.0;
  double settle_tolerance = 1e-6;
  double max_settle = 5e-3;  // s
  std::optional<double> observe_duration;  // s
  int observe_samples = 400;
  int cycles = 1;
  double rtol = 1e-9;
  double atol = 1e-13;

  bool operator==(const RunParams&) const = default;
};

struct Model {
  LevelScheme levels;
  CavityParams cavity;
  DriveParams drive;
  EnsembleParams ensemble;
  RunParams run;
  /// The configuration this model was validated from (after overrides).
  Config source;
  std::vector<std::string> warnings;

  bool operator==(const Model& o) const {
    return levels == o.levels && cavity == o.cavity && drive == o.drive && ensemble == o.ensemble &&
           run == o.run && source == o.source;
  }
};

struct ValidationIssue {
  std::string path;
  std::string message;
};

/// Raised by validate(); carries every violated invariant. Maps to exit status 1.
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  [[nodiscard]] const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

/// Parses, derives and checks a model from configuration.
Model validate(const Config& config);
/// Re-validates from the stored source; a no-op on a validated model.
Model validate(const Model& model);

/// Every key the schema understands, "section.key".
const std::vector<std::string>& known_keys();

}  // namespace cavdet
