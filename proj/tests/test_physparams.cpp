#include <doctest.h>

#include <cmath>
#include <random>

#include "cavdet/constants.hpp"
#include "cavdet/physparams.hpp"

using namespace cavdet;
using constants::pi;
using constants::two_pi;

TEST_CASE("waist of the 11.8 mm / 10 mm resonator") {
  // Hand evaluation: z_R = sqrt(11.8e-3 * 8.2e-3) / 2 = 4.918333e-3 m,
  // w0 = sqrt(675e-9 / pi * z_R) = 32.5077 um.
  const double w0 = cavity_waist(11.8e-3, 10e-3, 675e-9);
  CHECK(w0 == doctest::Approx(3.2507675597e-5).epsilon(1e-9));
  CHECK(std::abs(w0 - 30e-6) / 30e-6 < 0.10);
}

TEST_CASE("confocal waist closed form") {
  const double R = 10e-3, lambda = 675e-9;
  const double w0 = cavity_waist(R, R, lambda);
  CHECK(w0 * w0 == doctest::Approx(lambda * R / two_pi).epsilon(1e-14));
}

TEST_CASE("waist scales as sqrt(lambda)") {
  const double a = cavity_waist(11.8e-3, 10e-3, 675e-9);
  const double b = cavity_waist(11.8e-3, 10e-3, 1350e-9);
  CHECK(b / a == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("unstable geometries throw") {
  CHECK_THROWS_AS(cavity_waist(25e-3, 10e-3, 675e-9), GeometryError);
  CHECK_THROWS_AS(cavity_waist(20e-3, 10e-3, 675e-9), GeometryError);
  CHECK_THROWS_AS(cavity_waist(0.0, 10e-3, 675e-9), GeometryError);
}

TEST_CASE("mode geometry is self-consistent") {
  const ModeGeometry m = mode_geometry(11.8e-3, 10e-3, 675e-9);
  CHECK(m.mode_volume == doctest::Approx(pi / 4.0 * m.waist * m.waist * m.length).epsilon(1e-14));
  CHECK(m.rayleigh_range == doctest::Approx(pi * m.waist * m.waist / m.wavelength).epsilon(1e-12));
  CHECK(m.radius_at(m.rayleigh_range) == doctest::Approx(std::sqrt(2.0) * m.waist).epsilon(1e-12));

  const ModeGeometry o = mode_geometry(11.8e-3, 10e-3, 675e-9, 30e-6);
  CHECK(o.waist == 30e-6);
  CHECK(o.rayleigh_range == doctest::Approx(pi * 30e-6 * 30e-6 / 675e-9).epsilon(1e-12));
}

TEST_CASE("g0 from the dipole, SI hand evaluation") {
  // omega = 2 pi c / 675 nm = 2.79061e15 rad/s, V = 9.79363e-12 m^3;
  // 4.8e-29 * sqrt(omega / (2 hbar eps0 V)) = 2 pi * 2.98408 MHz.
  const ModeGeometry m = mode_geometry(11.8e-3, 10e-3, 675e-9);
  CHECK(m.mode_volume == doctest::Approx(9.793630688e-12).epsilon(1e-9));
  const double omega = two_pi * constants::speed_of_light / 675e-9;
  const double g0 = coupling_g0(4.8e-29, omega, m.mode_volume);
  CHECK(g0 / two_pi == doctest::Approx(2.98408001e6).epsilon(1e-8));
}

TEST_CASE("g0 scaling and zero dipole") {
  const double omega = 2.79e15;
  CHECK(coupling_g0(0.0, omega, 1e-11) == 0.0);
  CHECK(coupling_g0(4.8e-29, omega, 4e-11) == doctest::Approx(coupling_g0(4.8e-29, omega, 1e-11) / 2).epsilon(1e-15));
}

TEST_CASE("photon flux arithmetic") {
  // P lambda / (h c): 10 pW at 794 nm -> 3.99709e7 /s; at 675 nm -> 3.39803e7 /s.
  CHECK(photon_flux(10e-12, 794e-9) == doctest::Approx(3.997088555e7).epsilon(1e-9));
  CHECK(photon_flux(10e-12, 675e-9) == doctest::Approx(3.398028683e7).epsilon(1e-9));
  CHECK(photon_flux(0.0, 675e-9) == 0.0);
  for (double p : {1e-15, 3.7e-12, 0.23e-9, 1.0}) {
    CHECK(std::abs(power_from_flux(photon_flux(p, 675e-9), 675e-9) / p - 1.0) < 1e-12);
  }
}

TEST_CASE("empty resonant cavity transmits 4 k1 k2 / k^2") {
  const double kappa = two_pi * 2.5e6, k1 = 0.1 * kappa, k2 = 0.8 * kappa, lambda = 675e-9;
  const double p_in = 40e-12;
  const double eta = eta_from_input(p_in, k1, lambda);
  const double n_bar = eta * eta / (kappa * kappa);  // steady |alpha|^2 = eta^2 / kappa^2
  CHECK(output_power_from_photons(n_bar, k2, lambda) / p_in == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(eta_from_input(0.0, k1, lambda) == 0.0);
  CHECK(input_from_eta(eta, k1, lambda) == doctest::Approx(p_in).epsilon(1e-13));
}

TEST_CASE("output power per photon") {
  // hbar omega * 2 kappa_r2 with kappa_r2 = 0.8 * 2 pi * 2.5 MHz at 675 nm: 7.39627 pW.
  const double k2 = 0.8 * two_pi * 2.5e6;
  CHECK(output_power({1.0, 0.0}, k2, 675e-9) == doctest::Approx(7.396271066e-12).epsilon(1e-9));
  CHECK(output_power({0.0, 0.0}, k2, 675e-9) == 0.0);
  CHECK(output_power({0.6, 0.8}, k2, 675e-9) == doctest::Approx(output_power_from_photons(1.0, k2, 675e-9)));
  CHECK(output_power_from_photons(1.0, k2, 675e-9, FluxConvention::energy) ==
        doctest::Approx(0.5 * output_power_from_photons(1.0, k2, 675e-9)));
  CHECK(photons_from_output_power(output_power_from_photons(2.5, k2, 675e-9), k2, 675e-9) ==
        doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("flux conventions are mutually consistent") {
  // Either way, the empty cavity on resonance must conserve energy when lossless.
  const double kappa = two_pi * 1e6, lambda = 675e-9, p_in = 1e-12;
  for (auto conv : {FluxConvention::field, FluxConvention::energy}) {
    const double eta = eta_from_input(p_in, kappa / 2, lambda, conv);
    const double n = eta * eta / (kappa * kappa);
    CHECK(output_power_from_photons(n, kappa / 2, lambda, conv) <= p_in * (1 + 1e-12));
  }
}

TEST_CASE("point cloud at the mode center couples fully") {
  const ModeGeometry m = mode_geometry(11.8e-3, 10e-3, 675e-9);
  const CloudProfile point{{1e-9, 1e-9, 1e-12}, {0.0, 0.0, 0.0}};
  CHECK(mode_overlap(point, m) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(effective_atom_number(1e4, point, m) == doctest::Approx(1e4).epsilon(1e-5));
}

TEST_CASE("axially broad cloud: standing wave averages to one half") {
  // sigma_z >> lambda but << z_R, so w(z) ~ w0: <f^2> = 1/2 * w0^2 / (w0^2 + 4 sigma^2).
  const ModeGeometry m = mode_geometry(11.8e-3, 10e-3, 675e-9);
  const double s = 10e-6;
  const CloudProfile cloud{{s, s, 20e-6}, {0.0, 0.0, 0.0}};
  const double w2 = m.waist * m.waist;
  CHECK(mode_overlap(cloud, m) == doctest::Approx(0.5 * w2 / (w2 + 4 * s * s)).epsilon(1e-4));
}

TEST_CASE("Monte-Carlo overlap agrees with quadrature") {
  const ModeGeometry m = mode_geometry(11.8e-3, 10e-3, 675e-9);
  const CloudProfile cloud{{15e-6, 12e-6, 400e-6}, {5e-6, -3e-6, 150e-6}};
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nx(cloud.center[0], cloud.sigmas[0]), ny(cloud.center[1], cloud.sigmas[1]),
      nz(cloud.center[2], cloud.sigmas[2]);
  const int samples = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double f = mode_function(m, nx(rng), ny(rng), nz(rng));
    sum += f * f;
  }
  CHECK(mode_overlap(cloud, m) == doctest::Approx(sum / samples).epsilon(0.01));
}

TEST_CASE("overlap is monotone in cloud size and offset") {
  const ModeGeometry m = mode_geometry(11.8e-3, 10e-3, 675e-9);
  double prev = 2.0;
  for (double s : {2e-6, 5e-6, 10e-6, 20e-6, 40e-6}) {
    const double v = mode_overlap({{s, s, 100e-6}, {0, 0, 0}}, m);
    CHECK(v <= prev);
    prev = v;
  }
  prev = 2.0;
  for (double c : {0.0, 5e-6, 10e-6, 20e-6, 60e-6}) {
    const double v = mode_overlap({{10e-6, 10e-6, 100e-6}, {c, 0, 0}}, m);
    CHECK(v <= prev);
    prev = v;
  }
}
