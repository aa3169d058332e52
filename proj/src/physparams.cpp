#include "cavdet/physparams.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cavdet/constants.hpp"

namespace cavdet {
namespace {

using constants::pi;
using constants::two_pi;

double photon_energy(double wavelength) { return constants::planck * constants::speed_of_light / wavelength; }

double flux_factor(FluxConvention convention) { return convention == FluxConvention::field ? 2.0 : 1.0; }

// Transverse average of exp(-2 r^2 / w^2) for a Gaussian of RMS `sigma`
// centered at `offset`, one axis.
double transverse_factor(double w, double sigma, double offset) {
  const double w2 = w * w;
  const double denom = w2 + 4.0 * sigma * sigma;
  return std::sqrt(w2 / denom) * std::exp(-2.0 * offset * offset / denom);
}

}  // namespace

double ModeGeometry::radius_at(double z) const {
  const double ratio = z / rayleigh_range;
  return waist * std::sqrt(1.0 + ratio * ratio);
}

double rayleigh_range(double length, double roc) {
  if (!(length > 0.0) || !(roc > 0.0) || !(length < 2.0 * roc))
    throw GeometryError("unstable resonator: need 0 < L < 2R (L = " + std::to_string(length) +
                        " m, R = " + std::to_string(roc) + " m)");
  return 0.5 * std::sqrt(length * (2.0 * roc - length));
}

double cavity_waist(double length, double roc, double wavelength) {
  if (!(wavelength > 0.0)) throw GeometryError("wavelength must be positive");
  return std::sqrt(wavelength / pi * rayleigh_range(length, roc));
}

ModeGeometry mode_geometry(double length, double roc, double wavelength, double waist_override) {
  ModeGeometry mode;
  mode.wavelength = wavelength;
  mode.length = length;
  if (waist_override > 0.0) {
    mode.waist = waist_override;
    mode.rayleigh_range = pi * waist_override * waist_override / wavelength;
  } else {
    mode.waist = cavity_waist(length, roc, wavelength);
    mode.rayleigh_range = rayleigh_range(length, roc);
  }
  mode.mode_volume = pi / 4.0 * mode.waist * mode.waist * length;
  return mode;
}

double coupling_g0(double mu_ge, double omega_cv, double mode_volume) {
  return mu_ge * std::sqrt(omega_cv / (2.0 * constants::hbar * constants::vacuum_permittivity * mode_volume));
}

double photon_flux(double power, double wavelength) { return power / photon_energy(wavelength); }

double power_from_flux(double flux, double wavelength) { return flux * photon_energy(wavelength); }

double eta_from_input(double p_in, double kappa_r1, double wavelength, FluxConvention convention) {
  return std::sqrt(flux_factor(convention) * kappa_r1 * photon_flux(p_in, wavelength));
}

double input_from_eta(double eta, double kappa_r1, double wavelength, FluxConvention convention) {
  if (kappa_r1 <= 0.0) return 0.0;
  return power_from_flux(eta * eta / (flux_factor(convention) * kappa_r1), wavelength);
}

double output_power(std::complex<double> alpha, double kappa_r2, double wavelength, FluxConvention convention) {
  return output_power_from_photons(std::norm(alpha), kappa_r2, wavelength, convention);
}

double output_power_from_photons(double n_bar, double kappa_r2, double wavelength, FluxConvention convention) {
  return power_from_flux(flux_factor(convention) * kappa_r2 * n_bar, wavelength);
}

double photons_from_output_power(double p_out, double kappa_r2, double wavelength, FluxConvention convention) {
  return photon_flux(p_out, wavelength) / (flux_factor(convention) * kappa_r2);
}

double mode_function(const ModeGeometry& mode, double x, double y, double z) {
  const double k = two_pi / mode.wavelength;
  const double w = mode.radius_at(z);
  return std::cos(k * z) * std::exp(-(x * x + y * y) / (w * w));
}

double mode_overlap(const CloudProfile& cloud, const ModeGeometry& mode) {
  for (double s : cloud.sigmas)
    if (!(s > 0.0)) throw std::invalid_argument("cloud sigmas must be positive");

  // The transverse Gaussian average is closed form at each z; the axial
  // integral (standing-wave fringes times the cloud envelope) is composite
  // Simpson over +-8 sigma_z with >= 40 nodes per fringe.
  const double k = two_pi / mode.wavelength;
  const double sz = cloud.sigmas[2];
  const double cz = cloud.center[2];
  const double half = 8.0 * sz;
  const double step_target = std::min(sz / 50.0, mode.wavelength / 80.0);
  long intervals = static_cast<long>(std::ceil(2.0 * half / step_target));
  intervals = std::clamp<long>(intervals + (intervals % 2), 200, 20'000'000);
  const double h = 2.0 * half / static_cast<double>(intervals);

  auto integrand = [&](double z) {
    const double w = mode.radius_at(z);
    const double t = transverse_factor(w, cloud.sigmas[0], cloud.center[0]) *
                     transverse_factor(w, cloud.sigmas[1], cloud.center[1]);
    const double c = std::cos(k * z);
    const double u = (z - cz) / sz;
    return t * c * c * std::exp(-0.5 * u * u);
  };

  double sum = integrand(cz - half) + integrand(cz + half);
  for (long i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(cz - half + h * static_cast<double>(i));
  const double integral = sum * h / 3.0;
  return integral / (std::sqrt(two_pi) * sz);
}

double effective_atom_number(double n_total, const CloudProfile& cloud, const ModeGeometry& mode) {
  return n_total * mode_overlap(cloud, mode);
}

}  // namespace cavdet
