#pragma once

#include <cmath>
#include <string>

#include "plap/errors.hpp"

namespace plap {

/// Root of f on [lo, hi] where f(lo), f(hi) have opposite signs (or one is 0).
/// Bisection with a safeguarded secant step: the secant candidate is accepted
/// only when it falls strictly inside the bracket and the bracket shrank by at
/// least half over the previous two iterations.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double x_tol = 0.0, int max_iter = 400) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw DomainError("bracketed_root: no sign change on [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  double width_prev2 = 2.0 * std::abs(hi - lo), width_prev = std::abs(hi - lo);
  for (int it = 0; it < max_iter; ++it) {
    const double width = std::abs(hi - lo);
    const double mid = lo + 0.5 * (hi - lo);
    if (mid == lo || mid == hi || width <= x_tol) break;
    double x = mid;
    if (width <= 0.5 * width_prev2) {
      const double xs = hi - fhi * (hi - lo) / (fhi - flo);
      const double m = std::min(lo, hi), M = std::max(lo, hi);
      if (std::isfinite(xs) && xs > m && xs < M) x = xs;
    }
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    width_prev2 = width_prev;
    width_prev = width;
  }
  return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

}  // namespace plap
