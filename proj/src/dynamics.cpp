#include "cavdet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "cavdet/analytics.hpp"
#include "cavdet/physparams.hpp"

namespace cavdet {

Rates Rates::from_model(const Model& model) {
  Rates r;
  r.kappa_t = model.cavity.kappa_t;
  r.g0 = model.cavity.g0;
  r.n_c = model.ensemble.n_c;
  r.eta = model.drive.eta;
  r.gamma1 = model.levels.gamma1;
  r.gamma2 = model.levels.gamma2;
  r.gamma3 = model.levels.gamma3;
  r.gamma_gg = model.levels.gamma_gg;
  r.omega = model.drive.omega_control;
  r.delta_pc = model.drive.delta_pc;
  r.delta_pa = model.drive.delta_pa;
  r.delta_ra = model.drive.delta_ra;
  return r;
}

double Rates::fastest() const {
  return std::max({kappa_t, gamma_t(), omega, g0 * std::sqrt(n_c), std::abs(delta_pc), std::abs(delta_pa),
                   std::abs(delta_ra)});
}

void rhs_vrs(const StateVector& y, const Rates& r, StateVector& dydt) {
  const cdouble alpha(y[0], y[1]);
  const cdouble rge(y[2], y[3]);
  const double rgg = y[8];
  const double ree = y[9];
  const cdouble i(0.0, 1.0);
  const double gamma_t = r.gamma1 + r.gamma2 + r.gamma3;

  const cdouble dalpha = -cdouble(r.kappa_t, -r.delta_pc) * alpha - i * (r.g0 * r.n_c) * rge - r.eta;
  const cdouble drge = -cdouble(0.5 * gamma_t, -r.delta_pa) * rge + i * r.g0 * alpha * (ree - rgg);
  // i g (alpha* rho_ge - alpha rho_ge*) = -2 g Im(alpha* rho_ge)
  const double exchange = -2.0 * r.g0 * std::imag(std::conj(alpha) * rge);

  dydt[0] = dalpha.real();
  dydt[1] = dalpha.imag();
  dydt[2] = drge.real();
  dydt[3] = drge.imag();
  dydt[4] = dydt[5] = dydt[6] = dydt[7] = 0.0;
  dydt[8] = r.gamma1 * ree - exchange;
  dydt[9] = -gamma_t * ree + exchange;
  dydt[10] = (r.gamma2 + r.gamma3) * ree;
  dydt[11] = 0.0;
}

void rhs_eit(const StateVector& y, const Rates& r, StateVector& dydt) {
  const cdouble alpha(y[0], y[1]);
  const cdouble rge(y[2], y[3]);
  const cdouble rggp(y[4], y[5]);
  const cdouble rgpe(y[6], y[7]);
  const double rgg = y[8];
  const double ree = y[9];
  const double rgpgp = y[10];
  const cdouble i(0.0, 1.0);
  const double gamma_t = r.gamma1 + r.gamma2 + r.gamma3;
  const double omega = r.omega;  // real control amplitude

  const cdouble dalpha = -cdouble(r.kappa_t, -r.delta_pc) * alpha - i * (r.g0 * r.n_c) * rge - r.eta;
  const cdouble drge = -cdouble(0.5 * gamma_t, -r.delta_pa) * rge + i * r.g0 * alpha * (ree - rgg) -
                       i * omega * rggp;
  const cdouble drggp = cdouble(-r.gamma_gg, r.delta_pa - r.delta_ra) * rggp +
                        i * r.g0 * alpha * std::conj(rgpe) - i * omega * rge;
  const cdouble drgpe = cdouble(-0.5 * gamma_t, r.delta_ra) * rgpe - i * r.g0 * alpha * std::conj(rggp) -
                        i * omega * (rgpgp - ree);
  const double exchange = -2.0 * r.g0 * std::imag(std::conj(alpha) * rge);
  // i Omega (rho_eg' - rho_g'e) = 2 Omega Im(rho_g'e)
  const double control = 2.0 * omega * std::imag(rgpe);

  dydt[0] = dalpha.real();
  dydt[1] = dalpha.imag();
  dydt[2] = drge.real();
  dydt[3] = drge.imag();
  dydt[4] = drggp.real();
  dydt[5] = drggp.imag();
  dydt[6] = drgpe.real();
  dydt[7] = drgpe.imag();
  dydt[8] = r.gamma1 * ree - exchange;
  dydt[9] = -gamma_t * ree + exchange - control;
  dydt[10] = r.gamma2 * ree + control;
  dydt[11] = r.gamma3 * ree;
}

MeanFieldState derivative(Scheme scheme, const MeanFieldState& s, const Rates& r) {
  StateVector d{};
  if (scheme == Scheme::vrs)
    rhs_vrs(s.pack(), r, d);
  else
    rhs_eit(s.pack(), r, d);
  return MeanFieldState::unpack(d);
}

IntegratorOptions integrator_options(const Model& model, const Rates& rates) {
  IntegratorOptions opt;
  opt.rtol = model.run.rtol;
  opt.atol = model.run.atol;
  opt.fastest_rate = rates.fastest();
  return opt;
}

namespace {

auto make_rhs(Scheme scheme, const Rates& rates) {
  return [scheme, &rates](double, const StateVector& y, StateVector& dydt) {
    if (scheme == Scheme::vrs)
      rhs_vrs(y, rates, dydt);
    else
      rhs_eit(y, rates, dydt);
  };
}

void accumulate(IntegratorStats& total, const IntegratorStats& part) {
  total.accepted += part.accepted;
  total.rejected += part.rejected;
  total.evaluations += part.evaluations;
  total.last_step = part.last_step;
}

double trace_error(const MeanFieldState& s) { return std::abs(s.trace() - 1.0); }

double resolved_eta(const Model& model, Scheme scheme, std::span<const double> grid, double offset, double delta_ra) {
  if (model.drive.target_peak_p_out)
    return calibrate_eta(model, scheme, grid, offset, delta_ra, *model.drive.target_peak_p_out);
  return model.drive.eta;
}

double input_power(const Model& model, double eta) {
  return input_from_eta(eta, model.cavity.kappa_r1, model.levels.wavelength, model.drive.flux_convention);
}

ScanResult run_scan(Scheme scheme, const Model& model, const ScanSpec& scan) {
  if (scan.steps < 2) throw std::invalid_argument("scan needs at least 2 steps");
  if (!(scan.dwell > 0)) throw std::invalid_argument("scan dwell must be positive");

  const auto grid = scan.detunings();
  ScanResult result;
  result.scheme = scheme;
  result.spec = scan;
  result.eta = resolved_eta(model, scheme, grid, scan.atom_cavity_offset, scan.delta_ra);
  result.p_in = input_power(model, result.eta);

  Rates rates = Rates::from_model(model);
  rates.eta = result.eta;
  if (scheme == Scheme::vrs) rates.omega = 0.0;
  rates.delta_ra = scan.delta_ra;

  // One continuous integration; only the detunings change between steps.
  DormandPrince<kStateSize> stepper(integrator_options(model, rates));
  StateVector y = MeanFieldState::ground().pack();
  auto rhs = make_rhs(scheme, rates);
  double t = 0.0;
  result.points.reserve(grid.size());
  for (double d : grid) {
    rates.delta_pc = d;
    rates.delta_pa = d + scan.atom_cavity_offset;
    stepper.set_fastest_rate(rates.fastest());
    y = stepper.integrate(rhs, y, t, t + scan.dwell);
    t += scan.dwell;
    const auto s = MeanFieldState::unpack(y);
    ScanPoint p;
    p.detuning = d;
    p.n_bar = s.n_bar();
    p.p_out = output_power(s.alpha, model.cavity.kappa_r2, model.levels.wavelength, model.drive.flux_convention);
    p.rho_gg = s.rho_gg;
    p.rho_ee = s.rho_ee;
    p.rho_gpgp = s.rho_gpgp;
    p.rho_gpp = s.rho_gpp;
    result.points.push_back(p);
    result.max_trace_error = std::max(result.max_trace_error, trace_error(s));
  }
  result.final_state = MeanFieldState::unpack(y);
  result.stats = stepper.stats();
  return result;
}

}  // namespace

Trajectory integrate(Scheme scheme, const Rates& rates, const MeanFieldState& start, double duration,
                     std::span<const double> samples, const IntegratorOptions& options) {
  if (!(duration > 0)) throw std::invalid_argument("integration duration must be positive");
  Trajectory traj;
  DormandPrince<kStateSize> stepper(options);
  const auto y = stepper.integrate(make_rhs(scheme, rates), start.pack(), 0.0, duration, samples,
                                   [&](double t, const StateVector& ys) {
                                     traj.t.push_back(t);
                                     traj.states.push_back(MeanFieldState::unpack(ys));
                                   });
  traj.final_state = MeanFieldState::unpack(y);
  traj.stats = stepper.stats();
  return traj;
}

double relaxation_time(Scheme scheme, const Rates& rates) {
  double slowest = rates.kappa_t;
  if (rates.n_c > 0 && rates.g0 > 0) {
    slowest = std::min(slowest, 0.5 * rates.gamma_t());
    // The dark-state polariton decays at d, well below kappa_t at large N_c.
    if (scheme == Scheme::eit && rates.omega > 0)
      slowest = std::min(
          slowest,
          0.5 * eit_fwhm(rates.g0, rates.n_c, rates.omega, rates.kappa_t, rates.gamma_t(), FwhmForm::exact).width);
  }
  return 1.0 / slowest;
}

SettleResult settle_to_steady(Scheme scheme, const Rates& rates, const MeanFieldState& start,
                              const SteadyStateCriterion& criterion, const IntegratorOptions& options) {
  if (!(criterion.tolerance > 0)) throw std::invalid_argument("settle tolerance must be positive");
  const double tau = relaxation_time(scheme, rates);
  DormandPrince<kStateSize> stepper(options);
  auto rhs = make_rhs(scheme, rates);
  StateVector y = start.pack();
  double t = 0.0;
  while (t < criterion.max_time) {
    const double chunk = std::min(tau, criterion.max_time - t);
    y = stepper.integrate(rhs, y, t, t + chunk);
    t += chunk;
    StateVector dydt{};
    rhs(t, y, dydt);
    const double alpha_abs = std::hypot(y[0], y[1]);
    const double dalpha = std::hypot(dydt[0], dydt[1]) * tau;
    double drho = 0.0;
    for (std::size_t k = 2; k < kStateSize; ++k) drho = std::max(drho, std::abs(dydt[k]) * tau);
    if (dalpha <= criterion.tolerance * alpha_abs && drho <= criterion.tolerance)
      return {MeanFieldState::unpack(y), t, stepper.stats()};
  }
  throw ConvergenceError("steady state not reached within " + std::to_string(criterion.max_time) + " s");
}

SettleResult settle_to_steady(const Model& model, const SteadyStateCriterion& criterion) {
  Rates rates = Rates::from_model(model);
  const double grid[1] = {rates.delta_pc};
  rates.eta = resolved_eta(model, Scheme::eit, grid, rates.delta_pa - rates.delta_pc, rates.delta_ra);
  return settle_to_steady(Scheme::eit, rates, MeanFieldState::ground(), criterion, integrator_options(model, rates));
}

ScanSpec default_vrs_scan(const Model& model) {
  ScanSpec spec;
  spec.steps = model.run.scan_steps;
  spec.dwell = model.run.dwell;
  spec.atom_cavity_offset = model.drive.delta_pa - model.drive.delta_pc;
  spec.delta_ra = model.drive.delta_ra;
  if (model.run.scan_start && model.run.scan_stop) {
    spec.start = *model.run.scan_start;
    spec.stop = *model.run.scan_stop;
    return spec;
  }
  const double scale = std::max(model.cavity.g0 * std::sqrt(model.ensemble.n_c),
                                model.cavity.kappa_t + 0.5 * model.levels.gamma_t());
  const double half = model.run.vrs_scan_margin * scale;
  spec.start = -half;
  spec.stop = half;
  return spec;
}

ScanSpec default_eit_scan(const Model& model) {
  ScanSpec spec;
  spec.steps = model.run.scan_steps;
  spec.dwell = model.run.eit_dwell;
  spec.atom_cavity_offset = model.drive.delta_pa - model.drive.delta_pc;
  spec.delta_ra = model.drive.delta_ra;
  if (model.run.scan_start && model.run.scan_stop) {
    spec.start = *model.run.scan_start;
    spec.stop = *model.run.scan_stop;
    return spec;
  }
  const auto width = eit_fwhm(model.cavity.g0, model.ensemble.n_c, model.drive.omega_control, model.cavity.kappa_t,
                              model.levels.gamma_t(), FwhmForm::exact);
  const double half = model.run.eit_span_fwhm * (model.drive.omega_control > 0 ? width.width : 2.0 * model.cavity.kappa_t);
  // Two-photon resonance: Delta_pa = Delta_ra.
  const double center = spec.delta_ra - spec.atom_cavity_offset;
  spec.start = center - half;
  spec.stop = center + half;
  return spec;
}

double calibrate_eta(const Model& model, Scheme scheme, std::span<const double> delta_pc_grid,
                     double atom_cavity_offset, double delta_ra, double target_p_out) {
  if (delta_pc_grid.empty()) throw std::invalid_argument("calibrate_eta: empty detuning grid");
  const double g0 = model.cavity.g0;
  const double n_c = model.ensemble.n_c;
  const double gamma_t = model.levels.gamma_t();
  const double kappa_t = model.cavity.kappa_t;
  const double omega = scheme == Scheme::vrs ? 0.0 : model.drive.omega_control;
  auto response = [&](double dpc) {
    const double dpa = dpc + atom_cavity_offset;
    const Susceptibility chi = omega > 0 ? susceptibility(dpa, delta_ra, omega, g0, n_c, gamma_t)
                                         : two_level_susceptibility(dpa, g0, n_c, gamma_t);
    return steady_photon_number(1.0, dpc, kappa_t, chi);
  };

  // The peak of the continuous weak-probe response over the scanned range,
  // so a coarse grid does not inflate the drive.
  const auto [lo_it, hi_it] = std::minmax_element(delta_pc_grid.begin(), delta_pc_grid.end());
  const double lo = *lo_it, hi = *hi_it;
  double best_x = lo;
  double best = response(lo);
  if (hi > lo) {
    double narrowest = kappa_t;
    if (omega > 0)
      narrowest = std::min(narrowest, 0.5 * eit_fwhm(g0, n_c, omega, kappa_t, gamma_t, FwhmForm::exact).width);
    const double step = std::min((hi - lo) / 64.0, narrowest / 16.0);
    const auto count = static_cast<long>(std::ceil((hi - lo) / step));
    for (long k = 0; k <= count; ++k) {
      const double x = std::min(hi, lo + step * static_cast<double>(k));
      const double v = response(x);
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    // Golden-section refinement inside the bracketing cells.
    double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = response(c), fd = response(d);
    for (int it = 0; it < 80; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = response(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = response(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  const double n_target = photons_from_output_power(target_p_out, model.cavity.kappa_r2, model.levels.wavelength,
                                                    model.drive.flux_convention);
  return std::sqrt(n_target / best);
}

ScanResult run_vrs_scan(const Model& model, const ScanSpec& scan) { return run_scan(Scheme::vrs, model, scan); }

ScanResult run_eit_scan(const Model& model, const ScanSpec& scan) { return run_scan(Scheme::eit, model, scan); }

double default_observe_duration(const Model& model) {
  if (model.run.observe_duration) return *model.run.observe_duration;
  const double width = model.drive.omega_control > 0
                           ? eit_fwhm(model.cavity.g0, model.ensemble.n_c, model.drive.omega_control,
                                      model.cavity.kappa_t, model.levels.gamma_t(), FwhmForm::exact)
                                 .width
                           : 2.0 * model.cavity.kappa_t;
  return 6.0 / width;
}

RingdownResult run_ringdown(const Model& model, const SteadyStateCriterion& criterion, double observe_duration,
                            int cycles) {
  if (cycles < 1) throw std::invalid_argument("ring-down needs at least one cycle");
  if (!(observe_duration > 0)) throw std::invalid_argument("observation window must be positive");

  RingdownResult result;
  Rates on = Rates::from_model(model);
  const double grid[1] = {on.delta_pc};
  on.eta = resolved_eta(model, Scheme::eit, grid, on.delta_pa - on.delta_pc, on.delta_ra);
  result.eta = on.eta;
  result.p_in = input_power(model, on.eta);
  Rates off = on;
  off.eta = 0.0;

  const int n = model.run.observe_samples;
  std::vector<double> samples(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) samples[static_cast<std::size_t>(k)] = observe_duration * k / (n - 1);
  result.t = samples;
  result.p_out_accumulated.assign(samples.size(), 0.0);

  const auto options = integrator_options(model, on);
  auto power = [&](const MeanFieldState& s) {
    return output_power(s.alpha, model.cavity.kappa_r2, model.levels.wavelength, model.drive.flux_convention);
  };

  MeanFieldState state = MeanFieldState::ground();
  for (int c = 0; c < cycles; ++c) {
    const double before = state.rho_gpp;
    const SettleResult settled = settle_to_steady(Scheme::eit, on, state, criterion, options);
    accumulate(result.stats, settled.stats);
    result.settle_times.push_back(settled.settle_time);

    const auto decay = integrate(Scheme::eit, off, settled.state, observe_duration,
                                 std::span<const double>(samples).subspan(1), options);
    accumulate(result.stats, decay.stats);
    std::vector<double> trace;
    trace.reserve(samples.size());
    trace.push_back(power(settled.state));
    for (const auto& s : decay.states) {
      trace.push_back(power(s));
      result.max_trace_error = std::max(result.max_trace_error, trace_error(s));
    }
    for (std::size_t k = 0; k < trace.size(); ++k) result.p_out_accumulated[k] += trace[k];
    if (c == 0) {
      result.p_out = trace;
      result.p_out_steady = trace.front();
      result.steady_state = settled.state;
    }
    state = decay.final_state;
    result.cycle_loss.push_back(state.rho_gpp - before);
    result.cumulative_loss.push_back(state.rho_gpp);
  }
  result.final_state = state;
  return result;
}

}  // namespace cavdet
