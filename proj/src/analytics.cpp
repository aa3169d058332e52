#include "cavdet/analytics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cavdet {

double vrs_splitting(double g0, double n_c) { return 2.0 * g0 * std::sqrt(n_c); }

Susceptibility susceptibility(double delta_pa, double delta_ra, double omega_control, double g0, double n_c,
                              double gamma_t) {
  const double two_photon = delta_ra - delta_pa;
  const double numerator = 2.0 * g0 * g0 * n_c * two_photon;
  if (numerator == 0.0) return {};
  const std::complex<double> denominator =
      2.0 * omega_control * omega_control + std::complex<double>(2.0 * delta_pa, gamma_t) * two_photon;
  if (denominator == 0.0) throw std::domain_error("susceptibility pole: denominator vanishes");
  const auto chi = numerator / denominator;
  return {chi, chi.real(), chi.imag()};
}

Susceptibility two_level_susceptibility(double delta_pa, double g0, double n_c, double gamma_t) {
  const std::complex<double> denominator(2.0 * delta_pa, gamma_t);
  if (denominator == 0.0) {
    if (g0 * g0 * n_c == 0.0) return {};
    throw std::domain_error("susceptibility pole: resonant transition without decay");
  }
  const auto chi = 2.0 * g0 * g0 * n_c / denominator;
  return {chi, chi.real(), chi.imag()};
}

double steady_photon_number(double eta, double delta_pc, double kappa_t, const Susceptibility& chi) {
  const double a = delta_pc - chi.chi1;
  const double b = kappa_t - chi.chi2;
  return eta * eta / (a * a + b * b);
}

FwhmEstimate eit_fwhm(double g0, double n_c, double omega_control, double kappa_t, double gamma_t, FwhmForm form) {
  FwhmEstimate out;
  const double coupling = g0 * g0 * n_c;
  const double omega2 = omega_control * omega_control;
  out.validity_ratio = omega2 / (gamma_t * kappa_t);
  if (form == FwhmForm::exact) {
    const double s = coupling + omega2;
    out.width = 2.0 * omega2 * kappa_t / std::sqrt(gamma_t * coupling * kappa_t + s * s);
  } else {
    out.width = 2.0 * kappa_t / (coupling / omega2 + 1.0);
    if (out.validity_ratio < 10.0) {
      out.outside_validity = true;
      out.warning = "simplified linewidth used with |Omega|^2/(Gamma_t kappa_t) = " +
                    std::to_string(out.validity_ratio) + " (needs >> 1)";
    }
  }
  return out;
}

// ---- peaks ---------------------------------------------------------------

std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y, double relative_prominence) {
  if (x.size() != y.size()) throw std::invalid_argument("find_peaks: x and y differ in length");
  std::vector<Peak> peaks;
  const std::size_t n = y.size();
  if (n < 5) return peaks;
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double ymax = *hi_it;
  if (!(ymax > *lo_it)) return peaks;
  const double threshold = relative_prominence * ymax;

  for (std::size_t i = 0; i < n; ++i) {
    // A plateau counts once, at its left edge.
    const bool left_ok = i == 0 || y[i] > y[i - 1];
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    const bool right_ok = j + 1 == n || y[j + 1] < y[i];
    if (!(left_ok && right_ok)) continue;

    // Prominence: height above the higher of the two minima reached before
    // the series climbs above this peak on either side.
    double left_min = y[i];
    for (std::size_t k = i; k-- > 0;) {
      if (y[k] > y[i]) break;
      left_min = std::min(left_min, y[k]);
    }
    double right_min = y[i];
    for (std::size_t k = j + 1; k < n; ++k) {
      if (y[k] > y[i]) break;
      right_min = std::min(right_min, y[k]);
    }
    const double prominence = y[i] - std::max(left_min, right_min);
    if (prominence < threshold) continue;

    Peak p;
    p.index = i;
    p.height = y[i];
    p.position = x[i];
    p.prominence = prominence;
    if (i > 0 && i + 1 < n && j == i) {
      // Vertex of the parabola through three (possibly uneven) samples.
      const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
      const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
      const double d01 = (y1 - y0) / (x1 - x0);
      const double d12 = (y2 - y1) / (x2 - x1);
      const double curvature = (d12 - d01) / (x2 - x0);
      if (curvature < 0.0) {
        const double slope = d01 - curvature * (x0 + x1);
        const double vertex = -slope / (2.0 * curvature);
        if (vertex > x0 && vertex < x2) {
          p.position = vertex;
          p.height = y1 + d01 * (vertex - x1) + curvature * (vertex - x0) * (vertex - x1);
        }
      }
    }
    peaks.push_back(p);
    i = j;
  }
  return peaks;
}

std::vector<Peak> find_peaks(const ScanResult& scan, double relative_prominence) {
  std::vector<double> x, y;
  x.reserve(scan.points.size());
  y.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    x.push_back(p.detuning);
    y.push_back(p.p_out);
  }
  return find_peaks(x, y, relative_prominence);
}

// ---- Levenberg-Marquardt -------------------------------------------------

namespace {

template <int P>
struct LmResult {
  Eigen::Matrix<double, P, 1> params;
  Eigen::Matrix<double, P, P> jtj;
  double cost = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// Minimizes sum r_i(p)^2; `model(p, i, r, J)` fills one residual and its gradient row.
template <int P, class Model>
LmResult<P> levenberg_marquardt(Eigen::Matrix<double, P, 1> p, std::size_t n, Model&& model, int max_iter = 500) {
  using Vec = Eigen::Matrix<double, P, 1>;
  using Mat = Eigen::Matrix<double, P, P>;
  auto evaluate = [&](const Vec& q, Mat& jtj, Vec& jtr) {
    jtj.setZero();
    jtr.setZero();
    double cost = 0.0;
    double r = 0.0;
    Vec grad;
    for (std::size_t i = 0; i < n; ++i) {
      model(q, i, r, grad);
      jtj.noalias() += grad * grad.transpose();
      jtr.noalias() += grad * r;
      cost += r * r;
    }
    return cost;
  };

  LmResult<P> out;
  Mat jtj;
  Vec jtr;
  double cost = evaluate(p, jtj, jtr);
  out.trace.push_back(cost);
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  for (; iter < max_iter; ++iter) {
    Mat a = jtj;
    for (int k = 0; k < P; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-30);
    const Vec step = a.ldlt().solve(-jtr);
    if (!step.allFinite()) break;
    const Vec trial = p + step;
    Mat jtj_t;
    Vec jtr_t;
    const double cost_t = evaluate(trial, jtj_t, jtr_t);
    if (std::isfinite(cost_t) && cost_t <= cost) {
      const double improvement = cost - cost_t;
      p = trial;
      jtj = jtj_t;
      jtr = jtr_t;
      cost = cost_t;
      out.trace.push_back(cost);
      lambda = std::max(lambda / 3.0, 1e-12);
      if (improvement <= 1e-14 * cost + 1e-300 || step.norm() <= 1e-13 * (p.norm() + 1e-13)) {
        converged = true;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e16) {
        converged = jtr.norm() <= 1e-10 * std::sqrt(cost + 1e-300) || cost < 1e-28;
        break;
      }
    }
  }
  if (!converged) throw FitError("least-squares fit did not converge", out.trace);
  out.params = p;
  out.jtj = jtj;
  out.cost = cost;
  out.iterations = iter + 1;
  return out;
}

}  // namespace

FitReport fit_lorentzian(std::span<const double> x, std::span<const double> y, double residual_flag) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("fit_lorentzian: x and y differ in length");
  if (n < 4) throw FitError("fit_lorentzian: need at least 4 samples", {});

  const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double ymax = y[imax];
  if (!(ymax > 0.0)) throw FitError("fit_lorentzian: no positive signal", {});

  // Work in scaled units: u = (x - x_peak) / span, v = y / ymax.
  const double span = x[n - 1] - x[0];
  const double scale = span != 0.0 ? std::abs(span) : 1.0;
  const double xref = x[imax];
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = (x[i] - xref) / scale;
    v[i] = y[i] / ymax;
  }
  // Half-width guess from the half-maximum crossings.
  double left = u.front(), right = u.back();
  for (std::size_t k = imax; k-- > 0;)
    if (v[k] < 0.5) {
      left = u[k];
      break;
    }
  for (std::size_t k = imax + 1; k < n; ++k)
    if (v[k] < 0.5) {
      right = u[k];
      break;
    }
  double d0 = 0.5 * (right - left);
  if (!(d0 > 0.0)) d0 = 0.1;

  Eigen::Vector3d p(1.0, 0.0, d0);  // amplitude, center, half-width
  auto model = [&](const Eigen::Vector3d& q, std::size_t i, double& r, Eigen::Vector3d& grad) {
    const double dx = u[i] - q[1];
    const double d2 = q[2] * q[2];
    const double den = dx * dx + d2;
    const double shape = d2 / den;
    r = q[0] * shape - v[i];
    grad[0] = shape;
    grad[1] = q[0] * d2 * 2.0 * dx / (den * den);
    grad[2] = q[0] * 2.0 * q[2] * dx * dx / (den * den);
  };
  const auto lm = levenberg_marquardt<3>(p, n, model);

  FitReport report;
  report.amplitude = lm.params[0] * ymax;
  report.center = xref + lm.params[1] * scale;
  report.fwhm = 2.0 * std::abs(lm.params[2]) * scale;
  report.iterations = lm.iterations;
  report.samples_used = n;
  report.residual_norm = std::sqrt(lm.cost / static_cast<double>(n)) / std::abs(lm.params[0]);
  report.large_residual = report.residual_norm > residual_flag;
  const double dof = std::max<double>(1.0, static_cast<double>(n) - 3.0);
  const Eigen::Matrix3d cov = lm.jtj.inverse() * (lm.cost / dof);
  report.std_errors = {std::sqrt(std::abs(cov(0, 0))) * ymax, std::sqrt(std::abs(cov(1, 1))) * scale,
                       2.0 * std::sqrt(std::abs(cov(2, 2))) * scale};
  if (!(report.fwhm > 0.0) || !std::isfinite(report.fwhm))
    throw FitError("fit_lorentzian: degenerate width", lm.trace);
  return report;
}

FitReport fit_lorentzian(const ScanResult& scan, double residual_flag) {
  std::vector<double> x, y;
  for (const auto& p : scan.points) {
    x.push_back(p.detuning);
    y.push_back(p.p_out);
  }
  return fit_lorentzian(x, y, residual_flag);
}

FitReport fit_exponential(std::span<const double> t, std::span<const double> y, double residual_flag) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_exponential: t and y differ in length");
  std::size_t n = 0;
  bool truncated = false;
  while (n < y.size() && y[n] > 0.0) ++n;
  if (n < y.size()) truncated = true;
  if (n < 10) throw FitError("fit_exponential: fewer than 10 positive samples", {});

  const double t0 = t[0];
  const double window = t[n - 1] - t0;
  if (!(window > 0.0)) throw FitError("fit_exponential: empty time window", {});
  const double y0 = y[0];
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = (t[i] - t0) / window;
    v[i] = y[i] / y0;
  }

  // Log-linear least squares as the starting point.
  double su = 0, sv = 0, suu = 0, suv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lv = std::log(v[i]);
    su += u[i];
    sv += lv;
    suu += u[i] * u[i];
    suv += u[i] * lv;
  }
  const double dn = static_cast<double>(n);
  const double slope = (dn * suv - su * sv) / (dn * suu - su * su);
  const double intercept = (sv - slope * su) / dn;

  Eigen::Vector2d p(std::exp(intercept), -slope);
  auto model = [&](const Eigen::Vector2d& q, std::size_t i, double& r, Eigen::Vector2d& grad) {
    const double e = std::exp(-q[1] * u[i]);
    r = q[0] * e - v[i];
    grad[0] = e;
    grad[1] = -q[0] * u[i] * e;
  };
  const auto lm = levenberg_marquardt<2>(p, n, model);

  FitReport report;
  report.rate = lm.params[1] / window;
  report.amplitude = lm.params[0] * y0 * std::exp(report.rate * t0);
  report.iterations = lm.iterations;
  report.samples_used = n;
  report.truncated = truncated;
  report.window_end = t[n - 1];
  report.decay_constants_covered = report.rate * window;
  report.residual_norm = std::sqrt(lm.cost / dn) / std::abs(lm.params[0]);
  report.large_residual = report.residual_norm > residual_flag;
  const double dof = std::max(1.0, dn - 2.0);
  const Eigen::Matrix2d cov = lm.jtj.inverse() * (lm.cost / dof);
  report.std_errors = {std::sqrt(std::abs(cov(0, 0))) * y0, std::sqrt(std::abs(cov(1, 1))) / window};
  if (!(report.rate > 0.0)) throw FitError("fit_exponential: non-decaying signal", lm.trace);
  return report;
}

FitReport fit_exponential(const RingdownResult& ringdown, double residual_flag) {
  return fit_exponential(ringdown.t, ringdown.p_out, residual_flag);
}

// ---- losses --------------------------------------------------------------

namespace {

LossReport loss_from_state(Scheme scheme, const MeanFieldState& s, double n_c) {
  LossReport r;
  r.rho_gp = s.rho_gpgp;
  r.rho_gpp = s.rho_gpp;
  // With no coupled molecules the per-molecule state is a test particle only.
  if (n_c > 0) r.dark_fraction = scheme == Scheme::vrs ? s.rho_gpgp + s.rho_gpp : s.rho_gpp;
  r.molecules_lost = n_c * r.dark_fraction;
  return r;
}

}  // namespace

LossReport loss_fraction(const ScanResult& scan, double n_c) {
  return loss_from_state(scan.scheme, scan.final_state, n_c);
}

LossReport loss_fraction(const RingdownResult& ringdown, double n_c) {
  LossReport r = loss_from_state(Scheme::eit, ringdown.final_state, n_c);
  r.per_cycle = ringdown.cycle_loss;
  r.cumulative = ringdown.cumulative_loss;
  if (!(n_c > 0)) {
    std::fill(r.per_cycle.begin(), r.per_cycle.end(), 0.0);
    std::fill(r.cumulative.begin(), r.cumulative.end(), 0.0);
  }
  return r;
}

LossReport loss_fraction(Scheme scheme, std::span<const MeanFieldState> trajectory, double n_c) {
  if (trajectory.empty()) return {};
  return loss_from_state(scheme, trajectory.back(), n_c);
}

}  // namespace cavdet
