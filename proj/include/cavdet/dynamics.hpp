#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "cavdet/integrator.hpp"
#include "cavdet/model.hpp"
#include "cavdet/results.hpp"
#include "cavdet/state.hpp"

namespace cavdet {

/// Every rate the right-hand sides need, angular.
struct Rates {
  double kappa_t = 0.0;
  double g0 = 0.0;
  double n_c = 0.0;
  double eta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double gamma_gg = 0.0;
  double omega = 0.0;
  double delta_pc = 0.0;
  double delta_pa = 0.0;
  double delta_ra = 0.0;

  static Rates from_model(const Model& model);

  [[nodiscard]] double gamma_t() const { return gamma1 + gamma2 + gamma3; }
  /// max(kappa_t, Gamma_t, Omega, g0 sqrt(N_c), |detunings|)
  [[nodiscard]] double fastest() const;
};

/// Three-level VRS equations; |e> decays to |g> at gamma1 and to the single
/// dark level (stored in rho_gpgp) at gamma2 + gamma3.
void rhs_vrs(const StateVector& y, const Rates& r, StateVector& dydt);

/// Leaky four-level cavity-EIT equations, with |e> -> |g''> at gamma3.
void rhs_eit(const StateVector& y, const Rates& r, StateVector& dydt);

/// Convenience form returning the time derivative as a state-shaped value.
MeanFieldState derivative(Scheme scheme, const MeanFieldState& s, const Rates& r);

struct Trajectory {
  std::vector<double> t;
  std::vector<MeanFieldState> states;
  MeanFieldState final_state;
  IntegratorStats stats;
};

IntegratorOptions integrator_options(const Model& model, const Rates& rates);

/// Integrates at fixed rates from `start` for `duration`, recording `samples`
/// (times relative to the start, in (0, duration]).
Trajectory integrate(Scheme scheme, const Rates& rates, const MeanFieldState& start, double duration,
                     std::span<const double> samples, const IntegratorOptions& options);

/// Raised when a settle does not meet its criterion in time; exit status 2.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SteadyStateCriterion {
  /// Bound on |d alpha/dt| tau / |alpha| and on |d rho/dt| tau, checked every tau.
  /// tau is the slowest field relaxation time, see relaxation_time().
  double tolerance = 1e-6;
  double max_time = 5e-3;  // s

  static SteadyStateCriterion from_model(const Model& model) {
    return {model.run.settle_tolerance, model.run.max_settle};
  }
};

struct SettleResult {
  MeanFieldState state;
  double settle_time = 0.0;
  IntegratorStats stats;
};

/// 1 / min(kappa_t, Gamma_t/2, d), where d is the half-width of the EIT
/// window; the last two apply only with coupled molecules (and a control
/// field for d). A derivative bound over this time bounds the distance to the
/// steady state by about the same relative tolerance.
double relaxation_time(Scheme scheme, const Rates& rates);

SettleResult settle_to_steady(Scheme scheme, const Rates& rates, const MeanFieldState& start,
                              const SteadyStateCriterion& criterion, const IntegratorOptions& options);
/// Settles the four-level system at the model's fixed detunings from all-ground.
SettleResult settle_to_steady(const Model& model, const SteadyStateCriterion& criterion);

/// Scan covering both normal modes: half-width margin * max(g0 sqrt(N_c), kappa_t + Gamma_t/2).
ScanSpec default_vrs_scan(const Model& model);
/// Scan centered on two-photon resonance, half-width eit_span_fwhm * 2d (exact form).
ScanSpec default_eit_scan(const Model& model);

/// Drive rate that puts the weak-probe peak output on `target_p_out`. The peak
/// is taken over the continuous range spanned by the grid (Delta_pc values),
/// not just the grid points.
double calibrate_eta(const Model& model, Scheme scheme, std::span<const double> delta_pc_grid,
                     double atom_cavity_offset, double delta_ra, double target_p_out);

ScanResult run_vrs_scan(const Model& model, const ScanSpec& scan);
ScanResult run_eit_scan(const Model& model, const ScanSpec& scan);

/// Probe on until steady, then switched off; repeated `cycles` times with the
/// molecular state carried over.
RingdownResult run_ringdown(const Model& model, const SteadyStateCriterion& criterion, double observe_duration,
                            int cycles);
/// Ring-down observation window: 6 / (2d) of the exact EIT linewidth, or run.observe_s.
double default_observe_duration(const Model& model);

}  // namespace cavdet
