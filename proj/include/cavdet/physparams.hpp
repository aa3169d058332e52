#pragma once

#include <array>
#include <complex>
#include <stdexcept>

namespace cavdet {

/// Input-output bookkeeping convention for the cavity decay rates.
///
/// `field`: kappa is the field (amplitude) decay rate; the intracavity photon
/// number decays at 2*kappa and the mirror fluxes carry 2*kappa_r1 / 2*kappa_r2.
/// `energy`: the same ODE, but the mirror fluxes carry kappa_r1 / kappa_r2.
enum class FluxConvention { field, energy };

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fundamental Gaussian mode of a symmetric two-mirror resonator.
struct ModeGeometry {
  double waist = 0.0;           // m
  double rayleigh_range = 0.0;  // m
  double mode_volume = 0.0;     // m^3, standing wave (pi/4) w0^2 L
  double wavelength = 0.0;      // m
  double length = 0.0;          // m

  /// Beam radius at axial offset z from the waist.
  [[nodiscard]] double radius_at(double z) const;

  bool operator==(const ModeGeometry&) const = default;
};

/// Rayleigh range z_R = sqrt(L (2R - L)) / 2 of a symmetric resonator.
double rayleigh_range(double length, double roc);

/// Waist of the fundamental mode; throws GeometryError unless 0 < L < 2R.
double cavity_waist(double length, double roc, double wavelength);

/// Builds the mode geometry. A positive `waist_override` replaces the
/// resonator-derived waist (the Rayleigh range is then recomputed from it).
ModeGeometry mode_geometry(double length, double roc, double wavelength, double waist_override = 0.0);

/// |g0| = mu * sqrt(omega / (2 hbar eps0 V)), rad/s.
double coupling_g0(double mu_ge, double omega_cv, double mode_volume);

/// Photons per second carried by `power` at `wavelength`.
double photon_flux(double power, double wavelength);
double power_from_flux(double flux, double wavelength);

/// Drive rate eta for the cavity-field equation from the incident power.
double eta_from_input(double p_in, double kappa_r1, double wavelength,
                      FluxConvention convention = FluxConvention::field);
/// Inverse of eta_from_input.
double input_from_eta(double eta, double kappa_r1, double wavelength,
                      FluxConvention convention = FluxConvention::field);

/// Power leaving through the output mirror for intracavity amplitude alpha.
double output_power(std::complex<double> alpha, double kappa_r2, double wavelength,
                    FluxConvention convention = FluxConvention::field);
/// Output power for a given mean photon number.
double output_power_from_photons(double n_bar, double kappa_r2, double wavelength,
                                 FluxConvention convention = FluxConvention::field);
/// Mean photon number that produces `p_out` through the output mirror.
double photons_from_output_power(double p_out, double kappa_r2, double wavelength,
                                 FluxConvention convention = FluxConvention::field);

/// Gaussian molecular cloud, RMS radii and offset from the mode center (m).
struct CloudProfile {
  std::array<double, 3> sigmas{};
  std::array<double, 3> center{};
};

/// Standing-wave mode function f = cos(k z) exp(-(x^2+y^2)/w(z)^2).
double mode_function(const ModeGeometry& mode, double x, double y, double z);

/// Cloud average of f^2, evaluated by deterministic quadrature.
double mode_overlap(const CloudProfile& cloud, const ModeGeometry& mode);

/// N_c = N <f^2>; satisfies sum_j g_j^2 = g0^2 N_c.
double effective_atom_number(double n_total, const CloudProfile& cloud, const ModeGeometry& mode);

}  // namespace cavdet
