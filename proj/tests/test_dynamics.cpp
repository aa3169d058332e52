#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cavdet/analytics.hpp"
#include "cavdet/constants.hpp"
#include "cavdet/dynamics.hpp"

using namespace cavdet;
using constants::two_pi;

namespace {

Model make_model(const std::vector<std::string>& overrides) {
  Config c = Config::parse(
      "[cavity]\nkappa_t_hz = 2.5e6\ng0_hz = 219.2e3\n"
      "[drive]\np_in_w = 0.23e-9\n"
      "[ensemble]\nn_c = 5e4\n");
  for (const auto& o : overrides) c.apply_override(o);
  return validate(c);
}

Rates eit_rates(double n_c, double eta) {
  Rates r;
  r.kappa_t = two_pi * 0.5e6;
  r.g0 = two_pi * 219.2e3;
  r.n_c = n_c;
  r.eta = eta;
  r.gamma1 = two_pi * 401.5e3;
  r.gamma2 = two_pi * 456.6e3;
  r.gamma3 = two_pi * 6.44e6 - r.gamma1 - r.gamma2;
  r.omega = two_pi * 10e6;
  return r;
}

MeanFieldState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
  MeanFieldState s;
  s.alpha = {3 * u(rng), 3 * u(rng)};
  s.rho_ge = {0.1 * u(rng), 0.1 * u(rng)};
  s.rho_ggp = {0.1 * u(rng), 0.1 * u(rng)};
  s.rho_gpe = {0.1 * u(rng), 0.1 * u(rng)};
  double w[4] = {p(rng), p(rng), p(rng), p(rng)};
  const double sum = w[0] + w[1] + w[2] + w[3];
  s.rho_gg = w[0] / sum;
  s.rho_ee = w[1] / sum;
  s.rho_gpgp = w[2] / sum;
  s.rho_gpp = w[3] / sum;
  return s;
}

double population_rate(const MeanFieldState& d) { return d.rho_gg + d.rho_ee + d.rho_gpgp + d.rho_gpp; }

}  // namespace

TEST_CASE("ground state without drive is a fixed point") {
  Rates r = eit_rates(5e4, 0.0);
  r.delta_pc = two_pi * 1e6;
  r.delta_pa = two_pi * -3e5;
  for (Scheme s : {Scheme::vrs, Scheme::eit}) {
    const MeanFieldState d = derivative(s, MeanFieldState::ground(), r);
    CHECK(d == MeanFieldState{{}, {}, {}, {}, 0.0, 0.0, 0.0, 0.0});
  }
}

TEST_CASE("population derivatives sum to zero") {
  std::mt19937_64 rng(7);
  Rates r = eit_rates(1e4, 1e6);
  r.delta_pc = two_pi * 2e6;
  r.delta_pa = two_pi * 1e6;
  r.delta_ra = two_pi * -0.5e6;
  r.gamma_gg = two_pi * 1e4;
  for (int k = 0; k < 200; ++k) {
    const MeanFieldState s = random_state(rng);
    CHECK(std::abs(population_rate(derivative(Scheme::vrs, s, r))) < 1e-6);
    CHECK(std::abs(population_rate(derivative(Scheme::eit, s, r))) < 1e-6);
  }
}

TEST_CASE("four-level equations without control reduce to the three-level ones") {
  std::mt19937_64 rng(11);
  Rates r = eit_rates(2e4, 3e6);
  r.omega = 0.0;
  r.delta_pc = two_pi * 1.5e6;
  r.delta_pa = two_pi * -0.7e6;
  for (int k = 0; k < 50; ++k) {
    MeanFieldState s = random_state(rng);
    s.rho_gg += s.rho_gpgp + s.rho_gpp;
    s.rho_gpgp = s.rho_gpp = 0.0;
    s.rho_ggp = s.rho_gpe = 0.0;
    const MeanFieldState a = derivative(Scheme::vrs, s, r);
    const MeanFieldState b = derivative(Scheme::eit, s, r);
    CHECK(a.alpha == b.alpha);
    CHECK(a.rho_ge == b.rho_ge);
    CHECK(a.rho_gg == b.rho_gg);
    CHECK(a.rho_ee == b.rho_ee);
    CHECK(a.rho_gpgp == doctest::Approx(b.rho_gpgp + b.rho_gpp).epsilon(1e-14));
    CHECK(b.rho_ggp == cdouble{});
    CHECK(b.rho_gpe == cdouble{});
  }

  // Same for whole trajectories.
  const MeanFieldState start = MeanFieldState::ground();
  const std::vector<double> samples = {1e-6, 2e-6, 5e-6};
  IntegratorOptions opt;
  opt.fastest_rate = r.fastest();
  const Trajectory tv = integrate(Scheme::vrs, r, start, 5e-6, samples, opt);
  const Trajectory te = integrate(Scheme::eit, r, start, 5e-6, samples, opt);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    CHECK(std::abs(tv.states[k].alpha - te.states[k].alpha) <= 1e-8 * std::abs(tv.states[k].alpha));
    CHECK(tv.states[k].rho_gpgp == doctest::Approx(te.states[k].rho_gpgp + te.states[k].rho_gpp).epsilon(1e-8));
  }
}

TEST_CASE("empty cavity follows the analytic charge-up") {
  Rates r = eit_rates(0.0, 4e6);
  r.kappa_t = two_pi * 2.5e6;
  r.delta_pc = two_pi * 1e6;
  const cdouble z(r.kappa_t, -r.delta_pc);
  auto exact = [&](double t) { return -r.eta / z * (1.0 - std::exp(-z * t)); };
  std::vector<double> samples;
  for (int k = 1; k <= 40; ++k) samples.push_back(k * 25e-9);

  double prev = 1.0;
  for (double rtol : {1e-6, 1e-8, 1e-10}) {
    IntegratorOptions opt;
    opt.rtol = rtol;
    opt.atol = rtol * 1e-4;
    opt.fastest_rate = r.fastest();
    const Trajectory tr = integrate(Scheme::vrs, r, MeanFieldState::ground(), samples.back(), samples, opt);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k)
      worst = std::max(worst, std::abs(tr.states[k].alpha - exact(samples[k])) / std::abs(exact(samples[k])));
    if (rtol == 1e-10) CHECK(worst < 1e-6);
    CHECK(worst <= prev);
    prev = worst;
  }
}

TEST_CASE("empty cavity settles to -eta / (kappa - i Delta)") {
  // No coupling at all, so the molecular test particle stays put.
  Rates r = eit_rates(0.0, 2e6);
  r.g0 = 0.0;
  r.delta_pc = two_pi * 0.3e6;
  IntegratorOptions opt;
  opt.fastest_rate = r.fastest();
  const SettleResult s = settle_to_steady(Scheme::vrs, r, MeanFieldState::ground(), {1e-8, 1e-3}, opt);
  const cdouble expect = -r.eta / cdouble(r.kappa_t, -r.delta_pc);
  CHECK(std::abs(s.state.alpha - expect) / std::abs(expect) < 1e-6);
  // A few cavity lifetimes.
  CHECK(s.settle_time > 5.0 / r.kappa_t);
  CHECK(s.settle_time < 40.0 / r.kappa_t);
}

TEST_CASE("weak-probe steady state matches the linear solve") {
  // First order in alpha with all molecules in |g>:
  //   0 = -(kappa - i Dpc) a - i g N s_ge - eta
  //   0 = -(Gamma/2 - i Dpa) s_ge - i g a - i Omega s_gg'
  //   0 = -(gamma - i (Dpa - Dra)) s_gg' - i Omega s_ge
  Rates r = eit_rates(1e4, 2e4);
  r.gamma_gg = two_pi * 5e3;
  const cdouble i(0.0, 1.0);
  for (double dpc_hz : {0.0, 40e3, -120e3}) {
    r.delta_pc = r.delta_pa = two_pi * dpc_hz;
    Eigen::Matrix3cd A;
    A << -cdouble(r.kappa_t, -r.delta_pc), -i * r.g0 * r.n_c, 0.0,
        -i * r.g0, -cdouble(0.5 * r.gamma_t(), -r.delta_pa), -i * r.omega,
        0.0, -i * r.omega, -cdouble(r.gamma_gg, -(r.delta_pa - r.delta_ra));
    const Eigen::Vector3cd rhs(r.eta, 0.0, 0.0);
    const Eigen::Vector3cd x = A.partialPivLu().solve(rhs);

    IntegratorOptions opt;
    opt.fastest_rate = r.fastest();
    const SettleResult s = settle_to_steady(Scheme::eit, r, MeanFieldState::ground(), {1e-8, 5e-3}, opt);
    CHECK(std::abs(s.state.alpha - x(0)) / std::abs(x(0)) < 1e-3);
    CHECK(std::abs(s.state.rho_ge - x(1)) / std::abs(x(1)) < 1e-3);

    const auto chi = susceptibility(r.delta_pa, r.delta_ra, r.omega, r.g0, r.n_c, r.gamma_t());
    if (r.gamma_gg == 0.0) CHECK(steady_photon_number(r.eta, r.delta_pc, r.kappa_t, chi) == doctest::Approx(std::norm(x(0))));
  }
}

TEST_CASE("dark-state transparency on two-photon resonance") {
  const Rates r = eit_rates(5e4, 2e4);
  IntegratorOptions opt;
  opt.fastest_rate = r.fastest();
  const SettleResult s = settle_to_steady(Scheme::eit, r, MeanFieldState::ground(), {1e-7, 5e-3}, opt);
  const double n = s.state.n_bar();
  CHECK(n > 0);
  CHECK(s.state.rho_ee < 1e-6 * n * r.g0 * r.g0 / (r.omega * r.omega));
}

TEST_CASE("settle time at N_c = 5e4 and tightening the criterion") {
  Model m = make_model({"cavity.kappa_t_hz=0.5e6", "drive.p_in_w=40e-12", "drive.omega_control_hz=10e6"});
  const SettleResult loose = settle_to_steady(m, {1e-6, 5e-3});
  CHECK(loose.settle_time > 0.05e-3);
  CHECK(loose.settle_time < 0.2e-3);
  const SettleResult tight = settle_to_steady(m, {1e-7, 5e-3});
  CHECK(tight.settle_time > loose.settle_time);
  CHECK(std::abs(tight.state.alpha - loose.state.alpha) / std::abs(tight.state.alpha) < 1e-6);

  m.ensemble.n_c = 0.0;
  const double kappa = m.cavity.kappa_t;
  CHECK(settle_to_steady(m, {1e-6, 5e-3}).settle_time < 40.0 / kappa);
}

TEST_CASE("settling past the time limit is an error") {
  const Model m = make_model({"cavity.kappa_t_hz=0.5e6", "drive.p_in_w=40e-12", "drive.omega_control_hz=10e6"});
  CHECK_THROWS_AS(settle_to_steady(m, {1e-6, 1e-6}), ConvergenceError);
}

TEST_CASE("weak drive is linear") {
  const Model m = make_model({});
  Rates r = Rates::from_model(m);
  r.delta_pc = r.delta_pa = r.g0 * std::sqrt(r.n_c);  // upper normal mode
  r.eta = 2e5;
  const IntegratorOptions opt = integrator_options(m, r);
  const double samples[1] = {20e-6};
  const auto a1 = integrate(Scheme::vrs, r, MeanFieldState::ground(), 20e-6, samples, opt).final_state;
  r.eta *= 2;
  const auto a2 = integrate(Scheme::vrs, r, MeanFieldState::ground(), 20e-6, samples, opt).final_state;
  CHECK(a1.n_bar() > 0.0);
  CHECK(a1.n_bar() < 1e-2);
  CHECK(std::abs(a2.alpha / (2.0 * a1.alpha) - 1.0) < 1e-3);
}

TEST_CASE("trajectory conservation and physicality over 1 ms") {
  const Model m = make_model({});
  Rates r = Rates::from_model(m);
  r.delta_pc = r.delta_pa = 0.8 * r.g0 * std::sqrt(r.n_c);
  r.eta = 3e7;
  std::vector<double> samples;
  for (int k = 1; k <= 1000; ++k) samples.push_back(k * 1e-6);
  const Trajectory tr = integrate(Scheme::vrs, r, MeanFieldState::ground(), 1e-3, samples, integrator_options(m, r));
  for (const auto& s : tr.states) {
    CHECK(std::abs(s.trace() - 1.0) < 1e-9);
    for (double p : {s.rho_gg, s.rho_ee, s.rho_gpgp})
      CHECK((p >= -1e-9 && p <= 1.0 + 1e-9));
    CHECK(std::norm(s.rho_ge) <= s.rho_gg * s.rho_ee + 1e-6);
  }

  Rates e = eit_rates(1e3, 1e6);
  e.delta_pc = e.delta_pa = two_pi * 50e3;
  IntegratorOptions opt;
  opt.fastest_rate = e.fastest();
  const Trajectory te = integrate(Scheme::eit, e, MeanFieldState::ground(), 1e-3, samples, opt);
  for (const auto& s : te.states) {
    CHECK(std::abs(s.trace() - 1.0) < 1e-9);
    CHECK(std::norm(s.rho_ge) <= s.rho_gg * s.rho_ee + 1e-6);
    CHECK(std::norm(s.rho_gpe) <= s.rho_gpgp * s.rho_ee + 1e-6);
    CHECK(std::norm(s.rho_ggp) <= s.rho_gg * s.rho_gpgp + 1e-6);
  }
}

TEST_CASE("empty-cavity scan has one centred peak and no loss") {
  const Model m = make_model({"ensemble.n_c=0"});
  const ScanSpec spec = default_vrs_scan(m);
  const ScanResult scan = run_vrs_scan(m, spec);
  REQUIRE(scan.points.size() == 200);
  for (std::size_t k = 1; k < scan.points.size(); ++k) CHECK(scan.points[k].detuning > scan.points[k - 1].detuning);
  for (const auto& p : scan.points) CHECK(p.p_out >= 0.0);
  const auto peaks = find_peaks(scan);
  REQUIRE(peaks.size() == 1);
  const double step = (spec.stop - spec.start) / (spec.steps - 1);
  CHECK(std::abs(peaks[0].position) <= step);
  CHECK(loss_fraction(scan, 0.0).dark_fraction == 0.0);
}

TEST_CASE("calibrated VRS scan: target peak output and symmetric spectrum") {
  Config c = Config::parse(
      "[cavity]\nkappa_t_hz = 2.5e6\ng0_hz = 219.2e3\n"
      "[drive]\ntarget_peak_p_out_w = 10e-12\n"
      "[ensemble]\nn_c = 1e6\n");
  const Model m = validate(c);
  const ScanResult scan = run_vrs_scan(m, default_vrs_scan(m));
  const auto peaks = find_peaks(scan);
  REQUIRE(peaks.size() == 2);
  // Symmetry about zero detuning.
  CHECK(std::abs(peaks[0].position + peaks[1].position) < 0.01 * (peaks[1].position - peaks[0].position));
  CHECK(peaks[0].height == doctest::Approx(peaks[1].height).epsilon(0.1));
  for (const auto& p : scan.points) CHECK(p.p_out <= 10e-12 * 1.02);
}

TEST_CASE("empty-cavity ring-down is a pure exponential at 2 kappa") {
  const Model m = make_model({"ensemble.n_c=0", "cavity.kappa_t_hz=0.5e6", "drive.p_in_w=40e-12",
                              "drive.omega_control_hz=10e6"});
  const RingdownResult rd = run_ringdown(m, SteadyStateCriterion::from_model(m), default_observe_duration(m), 1);
  const double k = m.cavity.kappa_t;
  for (std::size_t i = 0; i < rd.t.size(); ++i)
    CHECK(rd.p_out[i] == doctest::Approx(rd.p_out_steady * std::exp(-2 * k * rd.t[i])).epsilon(1e-6));
}

TEST_CASE("ring-down cycles accumulate loss") {
  const Model m = make_model({"ensemble.n_c=1e3", "cavity.kappa_t_hz=0.5e6", "drive.p_in_w=40e-12",
                              "drive.omega_control_hz=10e6"});
  const RingdownResult rd = run_ringdown(m, SteadyStateCriterion::from_model(m), default_observe_duration(m), 3);
  REQUIRE(rd.cycle_loss.size() == 3);
  REQUIRE(rd.cumulative_loss.size() == 3);
  double sum = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(rd.cycle_loss[k] > 0);
    sum += rd.cycle_loss[k];
    CHECK(rd.cumulative_loss[k] == doctest::Approx(sum).epsilon(1e-9));
  }
  for (std::size_t i = 0; i < rd.t.size(); ++i) CHECK(rd.p_out_accumulated[i] >= rd.p_out[i]);
  CHECK(rd.max_trace_error < 1e-9);
}
