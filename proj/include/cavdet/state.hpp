#pragma once

#include <array>
#include <complex>

namespace cavdet {

using cdouble = std::complex<double>;

/// Packed real layout shared by the integrator and both right-hand sides.
inline constexpr std::size_t kStateSize = 12;
using StateVector = std::array<double, kStateSize>;

/// Mean-field cavity amplitude and single-molecule density-matrix elements.
///
/// Coherences follow the expectation-value convention rho_mn = <|m><n|>, so
/// the cavity equation couples to rho_ge. In the 3-level scheme the single
/// dark level lives in rho_gpgp and rho_ggp / rho_gpe / rho_gpp stay zero.
struct MeanFieldState {
  cdouble alpha{};
  cdouble rho_ge{};
  cdouble rho_ggp{};
  cdouble rho_gpe{};
  double rho_gg = 1.0;
  double rho_ee = 0.0;
  double rho_gpgp = 0.0;
  double rho_gpp = 0.0;

  /// All molecules in |g>, empty cavity.
  static MeanFieldState ground() { return {}; }

  [[nodiscard]] double n_bar() const { return std::norm(alpha); }
  [[nodiscard]] double trace() const { return rho_gg + rho_ee + rho_gpgp + rho_gpp; }

  [[nodiscard]] StateVector pack() const {
    return {alpha.real(), alpha.imag(), rho_ge.real(), rho_ge.imag(), rho_ggp.real(), rho_ggp.imag(),
            rho_gpe.real(), rho_gpe.imag(), rho_gg, rho_ee, rho_gpgp, rho_gpp};
  }

  static MeanFieldState unpack(const StateVector& v) {
    MeanFieldState s;
    s.alpha = {v[0], v[1]};
    s.rho_ge = {v[2], v[3]};
    s.rho_ggp = {v[4], v[5]};
    s.rho_gpe = {v[6], v[7]};
    s.rho_gg = v[8];
    s.rho_ee = v[9];
    s.rho_gpgp = v[10];
    s.rho_gpp = v[11];
    return s;
  }

  bool operator==(const MeanFieldState&) const = default;
};

}  // namespace cavdet
