#pragma once

// Shared helpers for the test binaries: a seeded generator and a few
// reference computations written independently of the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace testsupport {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  int sign() { return integer(0, 1) ? 1 : -1; }
};

// n-point Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5)), dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// composite Gauss-Legendre on `panels` equal panels
inline double composite_gl(const std::function<double(double)>& f, double a, double b,
                           int panels = 64, int n = 20) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double sum = 0.0;
  const double h = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    const double c = a + (k + 0.5) * h;
    for (int i = 0; i < n; ++i) sum += 0.5 * h * w[i] * f(c + 0.5 * h * x[i]);
  }
  return sum;
}

// integral over [a, b] with panels refined geometrically toward both ends,
// for integrands with algebraic endpoint singularities
inline double graded_gl(const std::function<double(double)>& f, double a, double b,
                        int levels = 50) {
  const double L = 0.5 * (b - a);
  double sum = 0.0;
  for (int side = -1; side <= 1; side += 2) {
    double hi = L;
    for (int k = 0; k < levels; ++k) {
      const double lo = hi * 0.5;
      // offsets [lo, hi] from the end
      if (side < 0) sum += composite_gl(f, a + lo, a + hi, 1, 20);
      else sum += composite_gl(f, b - hi, b - lo, 1, 20);
      hi = lo;
    }
  }
  return sum;
}

// pi_p = 2 (p-1)^{1/p} int_0^1 (1 - s^p)^{-1/p} ds with s = 1 - r^{p*},
// which leaves a bounded integrand
inline double pi_p_substituted(double p) {
  const double q = p / (p - 1.0);
  auto f = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double one_minus = -std::expm1(p * std::log1p(-std::pow(r, q)));  // 1 - s^p
    return q * std::pow(r, q - 1.0) * std::pow(one_minus, -1.0 / p);
  };
  return 2.0 * std::pow(p - 1.0, 1.0 / p) * composite_gl(f, 0.0, 1.0, 256, 20);
}

inline double pi_p_closed(double p) {
  return 2.0 * M_PI * std::pow(p - 1.0, 1.0 / p) / (p * std::sin(M_PI / p));
}

// complete elliptic integral of the first kind K(k) by the AGM
inline double ellip_k(double k) {
  double a = 1.0, b = std::sqrt(1.0 - k * k);
  for (int i = 0; i < 60 && std::abs(a - b) > 1e-16 * a; ++i) {
    const double m = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = m;
  }
  return M_PI / (2.0 * a);
}

// period of v'' = v^3 - v at H = -v'^2/2 + (1 - v^2)^2/4 = xi
inline double allen_cahn_period(double xi) {
  const double r = 2.0 * std::sqrt(xi);
  const double alpha = std::sqrt(1.0 - r), beta = std::sqrt(1.0 + r);
  return 4.0 * std::sqrt(2.0) / beta * ellip_k(alpha / beta);
}

}  // namespace testsupport
