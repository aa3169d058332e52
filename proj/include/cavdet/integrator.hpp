#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace cavdet {

/// Raised when the step size collapses; maps to exit status 2.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double t, double step, double dominant_rate)
      : std::runtime_error(what), t_(t), step_(step), dominant_rate_(dominant_rate) {}
  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] double step() const { return step_; }
  [[nodiscard]] double dominant_rate() const { return dominant_rate_; }

 private:
  double t_, step_, dominant_rate_;
};

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-13;
  /// Fastest rate in the problem (rad/s). Caps the step at 2 pi / (20 rate)
  /// and seeds the first step.
  double fastest_rate = 0.0;
  double min_step = 1e-18;  // s
  long max_steps = 200'000'000;
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double last_step = 0.0;
};

/// Dormand-Prince 5(4) with the 4th-order continuous extension.
///
/// `Rhs` is callable as rhs(t, y, dydt). `observe(t, y)` is invoked for each
/// requested sample time in (t0, t1], in order, using dense output.
template <std::size_t N>
class DormandPrince {
 public:
  using Vec = std::array<double, N>;

  explicit DormandPrince(IntegratorOptions options) : opt_(options) {}

  template <class Rhs, class Observer>
  Vec integrate(Rhs&& rhs, Vec y, double t0, double t1, std::span<const double> samples, Observer&& observe) {
    if (!(t1 > t0)) throw std::invalid_argument("integration interval must have positive duration");
    const double h_max = opt_.fastest_rate > 0 ? 2.0 * std::numbers::pi / (20.0 * opt_.fastest_rate) : (t1 - t0);
    double h = std::min({h_, h_max, t1 - t0});
    if (!(h > 0)) h = std::min(h_max, t1 - t0) * 0.1;

    std::size_t next_sample = 0;
    while (next_sample < samples.size() && samples[next_sample] <= t0) ++next_sample;

    double t = t0;
    Vec k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
    rhs(t, y, k1);
    ++stats_.evaluations;
    for (;;) {
      if (stats_.accepted + stats_.rejected > opt_.max_steps)
        throw StiffnessError("integrator exceeded the step budget", t, h, opt_.fastest_rate);
      bool last = false;
      if (t + h >= t1) {
        h = t1 - t;
        last = true;
      }
      for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
      rhs(t + c2 * h, ytmp, k2);
      for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      rhs(t + c3 * h, ytmp, k3);
      for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      rhs(t + c4 * h, ytmp, k4);
      for (std::size_t i = 0; i < N; ++i)
        ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      rhs(t + c5 * h, ytmp, k5);
      for (std::size_t i = 0; i < N; ++i)
        ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      rhs(t + h, ytmp, k6);
      for (std::size_t i = 0; i < N; ++i)
        ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      rhs(t + h, ynew, k7);
      stats_.evaluations += 6;

      double norm = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double scale = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double q = err[i] / scale;
        norm += q * q;
      }
      norm = std::sqrt(norm / static_cast<double>(N));
      if (!std::isfinite(norm)) norm = 1e10;

      if (norm <= 1.0) {
        ++stats_.accepted;
        stats_.last_step = h;
        const double t_new = last ? t1 : t + h;
        if (next_sample < samples.size() && samples[next_sample] <= t_new) {
          Vec r2, r3, r4, r5;
          for (std::size_t i = 0; i < N; ++i) {
            const double ydiff = ynew[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            r2[i] = ydiff;
            r3[i] = bspl;
            r4[i] = ydiff - h * k7[i] - bspl;
            r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
          }
          while (next_sample < samples.size() && samples[next_sample] <= t_new) {
            const double theta = (samples[next_sample] - t) / h;
            const double theta1 = 1.0 - theta;
            Vec ys;
            for (std::size_t i = 0; i < N; ++i)
              ys[i] = y[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
            observe(samples[next_sample], ys);
            ++next_sample;
          }
        }
        y = ynew;
        k1 = k7;
        t = t_new;
        const double fac = std::clamp(0.9 * std::pow(std::max(norm, 1e-10), -0.2), 0.2, 5.0);
        h_ = std::min(h * fac, h_max);
        if (last) break;
        h = h_;
      } else {
        ++stats_.rejected;
        h *= std::clamp(0.9 * std::pow(norm, -0.2), 0.1, 0.9);
      }
      if (h < opt_.min_step)
        throw StiffnessError("step size underflow at t = " + std::to_string(t) + " s (h = " + std::to_string(h) +
                                 " s); dominant rate " + std::to_string(opt_.fastest_rate) + " rad/s",
                             t, h, opt_.fastest_rate);
    }
    return y;
  }

  template <class Rhs>
  Vec integrate(Rhs&& rhs, Vec y, double t0, double t1) {
    return integrate(std::forward<Rhs>(rhs), y, t0, t1, std::span<const double>{}, [](double, const Vec&) {});
  }

  [[nodiscard]] const IntegratorStats& stats() const { return stats_; }
  void set_fastest_rate(double rate) { opt_.fastest_rate = rate; }

 private:
  IntegratorOptions opt_;
  IntegratorStats stats_;
  double h_ = std::numeric_limits<double>::infinity();

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

}  // namespace cavdet
