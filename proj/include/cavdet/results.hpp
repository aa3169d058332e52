#pragma once

#include <vector>

#include "cavdet/integrator.hpp"
#include "cavdet/state.hpp"

namespace cavdet {

enum class Scheme { vrs, eit };

/// Piecewise-constant probe detuning scan. Delta_pa tracks Delta_pc with a
/// fixed offset; Delta_ra is held.
struct ScanSpec {
  double start = 0.0;  // Delta_pc at step 0, rad/s
  double stop = 0.0;   // Delta_pc at the last step, rad/s
  int steps = 200;
  double dwell = 5e-7;  // s
  double atom_cavity_offset = 0.0;  // Delta_pa - Delta_pc
  double delta_ra = 0.0;

  [[nodiscard]] double detuning(int step) const {
    return start + (stop - start) * static_cast<double>(step) / static_cast<double>(steps - 1);
  }
  [[nodiscard]] double duration() const { return dwell * steps; }
  /// Detuning sweep rate, rad/s per s.
  [[nodiscard]] double scan_rate() const { return (stop - start) / duration(); }
  [[nodiscard]] std::vector<double> detunings() const {
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = detuning(i);
    return out;
  }
};

struct ScanPoint {
  double detuning = 0.0;  // Delta_pc, rad/s
  double p_out = 0.0;     // W
  double n_bar = 0.0;
  double rho_gg = 0.0;
  double rho_ee = 0.0;
  double rho_gpgp = 0.0;
  double rho_gpp = 0.0;
};

struct ScanResult {
  Scheme scheme = Scheme::vrs;
  ScanSpec spec;
  std::vector<ScanPoint> points;
  double eta = 0.0;
  double p_in = 0.0;
  MeanFieldState final_state;
  IntegratorStats stats;
  /// Largest deviation of the population trace from 1 over the recorded points.
  double max_trace_error = 0.0;
};

struct RingdownResult {
  /// Time since switch-off (s) and output power of the first cycle.
  std::vector<double> t;
  std::vector<double> p_out;
  /// Output power summed over all cycles at the same sample times.
  std::vector<double> p_out_accumulated;
  double p_out_steady = 0.0;
  double eta = 0.0;
  double p_in = 0.0;
  std::vector<double> settle_times;
  /// Increase of rho_g'' during each cycle (settle + observation).
  std::vector<double> cycle_loss;
  /// rho_g'' after each cycle.
  std::vector<double> cumulative_loss;
  MeanFieldState steady_state;  // first cycle, at switch-off
  MeanFieldState final_state;
  IntegratorStats stats;
  double max_trace_error = 0.0;
};

}  // namespace cavdet
