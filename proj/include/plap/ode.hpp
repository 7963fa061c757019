#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "plap/errors.hpp"

namespace plap {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;  // 0: chosen from the tolerance
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-15;  // relative to the integration span
  long max_steps = 20'000'000;
};

struct StepInfo {
  double x0, h;   // accepted step [x0, x0 + h]
  long steps;     // accepted steps so far
};

/// Dormand-Prince 5(4) explicit Runge-Kutta with PI step-size control.
/// Integrates forward or backward depending on the sign of x_end - x.
template <int N>
class DormandPrince {
 public:
  using State = Eigen::Matrix<double, N, 1>;

  explicit DormandPrince(OdeOptions opt = {}) : opt_(opt) {}

  const OdeOptions& options() const { return opt_; }

  /// Single embedded step of size h; returns the 5th-order solution and
  /// writes the 4th/5th-order difference into err.
  template <class Rhs>
  State step(Rhs&& f, double x, const State& y, double h, State* err = nullptr) const {
    const State k1 = f(x, y);
    const State k2 = f(x + h / 5.0, (y + h * (k1 / 5.0)).eval());
    const State k3 = f(x + 3.0 * h / 10.0, (y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2)).eval());
    const State k4 = f(x + 4.0 * h / 5.0,
                       (y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3)).eval());
    const State k5 = f(x + 8.0 * h / 9.0,
                       (y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                                 64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4))
                           .eval());
    const State k6 =
        f(x + h, (y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 +
                           49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5))
                     .eval());
    const State y1 = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                              2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
    if (err) {
      const State k7 = f(x + h, y1);
      *err = h * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4 -
                  17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k7);
    }
    return y1;
  }

  /// Advance (x, y) to x_end. After every accepted step obs(x, y, info) is
  /// called; it may modify y (projection) and returns false to stop early.
  template <class Rhs, class Obs>
  void integrate(Rhs&& f, double& x, State& y, double x_end, Obs&& obs) const {
    const double span = x_end - x;
    if (span == 0.0) return;
    const double dir = span > 0.0 ? 1.0 : -1.0;
    const double h_min = opt_.h_min * std::max(1.0, std::abs(span));
    double h = opt_.h_init > 0.0 ? opt_.h_init : initial_step(f, x, y, std::abs(span));
    h = std::min({h, opt_.h_max, std::abs(span)});
    double err_prev = 1e-4;
    long steps = 0;
    State err;
    while (dir * (x_end - x) > 0.0) {
      if (++steps > opt_.max_steps) throw NumericalError("ODE step budget exhausted", x);
      bool last = false;
      if (h >= std::abs(x_end - x)) {
        h = std::abs(x_end - x);
        last = true;
      }
      const State y1 = step(f, x, y, dir * h, &err);
      double en = 0.0;
      for (int i = 0; i < y.size(); ++i) {
        const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
        en = std::max(en, std::abs(err[i]) / sc);
      }
      if (!std::isfinite(en)) en = 1e10;
      if (en <= 1.0) {
        const double x0 = x;
        x = last ? x_end : x + dir * h;
        y = y1;
        const double fac = en == 0.0 ? 5.0
                                     : std::clamp(0.9 * std::pow(en, -0.17) *
                                                      std::pow(err_prev, 0.08),
                                                  0.2, 5.0);
        err_prev = std::max(en, 1e-4);
        const double h_used = h;
        h = std::min(h * fac, opt_.h_max);
        if (!obs(x, y, StepInfo{x0, dir * h_used, steps})) return;
      } else {
        h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
        if (h < h_min) throw NumericalError("ODE step size underflow (stiffness)", x);
      }
    }
  }

  template <class Rhs>
  void integrate(Rhs&& f, double& x, State& y, double x_end) const {
    integrate(f, x, y, x_end, [](double, State&, const StepInfo&) { return true; });
  }

 private:
  template <class Rhs>
  double initial_step(Rhs&& f, double x, const State& y, double span) const {
    const State f0 = f(x, y);
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::abs(y[i]);
      d0 = std::max(d0, std::abs(y[i]) / sc);
      d1 = std::max(d1, std::abs(f0[i]) / sc);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    return std::clamp(h, 1e-12 * span, span);
  }

  OdeOptions opt_;
};

/// Refine an event g(x, y) = 0 inside an accepted step [x0, x0 + h] starting
/// from y0, where g changes sign over the step. Each trial re-integrates a
/// single Runge-Kutta step from the step start, so the located state carries
/// the integrator's local accuracy rather than interpolation error.
template <int N, class Rhs, class G>
std::pair<double, Eigen::Matrix<double, N, 1>> locate_event(
    const DormandPrince<N>& dp, Rhs&& f, double x0, const Eigen::Matrix<double, N, 1>& y0,
    double h, G&& g, double x_tol = 1e-15) {
  using State = Eigen::Matrix<double, N, 1>;
  double lo = 0.0, hi = h;
  double glo = g(x0, y0);
  State yhi = dp.step(f, x0, y0, h);
  double ghi = g(x0 + h, yhi);
  State ylo = y0;
  const double tol = x_tol * std::max(1.0, std::abs(x0));
  for (int it = 0; it < 200 && std::abs(hi - lo) > tol; ++it) {
    double s = hi - ghi * (hi - lo) / (ghi - glo);
    const double m = std::min(lo, hi), M = std::max(lo, hi);
    if (!(s > m + 0.01 * (M - m) && s < M - 0.01 * (M - m))) s = 0.5 * (lo + hi);
    const State ys = dp.step(f, x0, y0, s);
    const double gs = g(x0 + s, ys);
    if (gs == 0.0) return {x0 + s, ys};
    if ((gs > 0.0) == (glo > 0.0)) {
      lo = s;
      glo = gs;
      ylo = ys;
    } else {
      hi = s;
      ghi = gs;
      yhi = ys;
    }
  }
  return std::abs(glo) < std::abs(ghi) ? std::pair{x0 + lo, ylo} : std::pair{x0 + hi, yhi};
}

}  // namespace plap
