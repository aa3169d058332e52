#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavdet/results.hpp"

namespace cavdet {

// ---- closed-form observables -------------------------------------------

/// Normal-mode splitting 2 g0 sqrt(N_c), rad/s.
double vrs_splitting(double g0, double n_c);

/// Linear cavity-EIT susceptibility chi = chi1 + i chi2 (rad/s).
struct Susceptibility {
  std::complex<double> chi{};
  double chi1 = 0.0;
  double chi2 = 0.0;
};

/// chi = 2 g0^2 N_c (Dra - Dpa) / (2 |Omega|^2 + (2 Dpa + i Gamma_t)(Dra - Dpa)).
/// Exactly zero on two-photon resonance. Throws std::domain_error at a pole.
Susceptibility susceptibility(double delta_pa, double delta_ra, double omega_control, double g0, double n_c,
                              double gamma_t);

/// Two-level limit (no control field): chi = 2 g0^2 N_c / (2 Dpa + i Gamma_t).
Susceptibility two_level_susceptibility(double delta_pa, double g0, double n_c, double gamma_t);

/// n = eta^2 / ((Dpc - chi1)^2 + (kappa_t - chi2)^2).
double steady_photon_number(double eta, double delta_pc, double kappa_t, const Susceptibility& chi);

enum class FwhmForm { exact, simplified };

struct FwhmEstimate {
  double width = 0.0;  // 2d, rad/s
  /// |Omega|^2 / (Gamma_t kappa_t); the simplified form needs this >> 1.
  double validity_ratio = 0.0;
  /// Set when the simplified form is requested with validity_ratio < 10.
  bool outside_validity = false;
  std::string warning;
};

/// Cavity-EIT transmission FWHM 2d.
///   exact:      2 |Omega|^2 kappa / sqrt(Gamma_t g0^2 kappa N_c + (g0^2 N_c + |Omega|^2)^2)
///   simplified: 2 kappa / (g0^2 N_c / |Omega|^2 + 1)
FwhmEstimate eit_fwhm(double g0, double n_c, double omega_control, double kappa_t, double gamma_t, FwhmForm form);

// ---- signal extraction -------------------------------------------------

struct Peak {
  double position = 0.0;
  double height = 0.0;
  std::size_t index = 0;
  double prominence = 0.0;
};

/// Local maxima whose topographic prominence is at least
/// `relative_prominence` of the series maximum, with the position refined by
/// a parabola through the three surrounding samples. Needs >= 5 points.
std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y,
                             double relative_prominence = 0.05);
/// Peaks of the output power versus Delta_pc.
std::vector<Peak> find_peaks(const ScanResult& scan, double relative_prominence = 0.05);

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<double> cost_trace)
      : std::runtime_error(what), cost_trace_(std::move(cost_trace)) {}
  [[nodiscard]] const std::vector<double>& cost_trace() const { return cost_trace_; }

 private:
  std::vector<double> cost_trace_;
};

struct FitReport {
  // Lorentzian: A d^2 / ((x - x0)^2 + d^2)
  double center = 0.0;
  double fwhm = 0.0;  // 2d
  // Lorentzian amplitude A, or exponential prefactor I0
  double amplitude = 0.0;
  // Exponential: I0 exp(-rate t)
  double rate = 0.0;
  /// RMS residual relative to the fitted amplitude.
  double residual_norm = 0.0;
  /// One-sigma parameter errors from the Gauss-Newton covariance.
  std::vector<double> std_errors;
  bool large_residual = false;
  int iterations = 0;
  std::size_t samples_used = 0;
  /// Exponential fits: set when the window was cut before a non-positive tail.
  bool truncated = false;
  double window_end = 0.0;
  /// Exponential fits: rate * window length; below 2 the window is short.
  double decay_constants_covered = 0.0;
};

/// Least-squares single-Lorentzian fit. `residual_flag` marks large_residual.
FitReport fit_lorentzian(std::span<const double> x, std::span<const double> y, double residual_flag = 0.05);
FitReport fit_lorentzian(const ScanResult& scan, double residual_flag = 0.05);

/// Least-squares I0 exp(-r t) fit.
FitReport fit_exponential(std::span<const double> t, std::span<const double> y, double residual_flag = 0.01);
FitReport fit_exponential(const RingdownResult& ringdown, double residual_flag = 0.01);

// ---- loss accounting ---------------------------------------------------

struct LossReport {
  double rho_gp = 0.0;   // VRS: the aggregate dark level; EIT: control-coupled |g'>
  double rho_gpp = 0.0;  // EIT dark level
  double dark_fraction = 0.0;  // fraction lost for detection
  double molecules_lost = 0.0;  // N_c * dark_fraction
  std::vector<double> per_cycle;   // ring-down only
  std::vector<double> cumulative;  // ring-down only
};

LossReport loss_fraction(const ScanResult& scan, double n_c);
LossReport loss_fraction(const RingdownResult& ringdown, double n_c);
LossReport loss_fraction(Scheme scheme, std::span<const MeanFieldState> trajectory, double n_c);

}  // namespace cavdet
