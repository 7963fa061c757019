#include "plap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <string>

#include "plap/errors.hpp"

namespace plap {

namespace {

// Kronrod nodes (positive half, descending), Kronrod weights and the weights
// of the embedded 7-point Gauss rule (which uses the odd-indexed nodes).
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = hw * kXgk[j];
    const double fsum = f(c - dx) + f(c + dx);
    resk += kWgk[j] * fsum;
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  return {a, b, resk * hw, std::abs((resk - resg) * hw)};
}

}  // namespace

QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                         double rel_tol, double abs_tol, int max_intervals) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<Segment> heap;
  Segment first = kronrod15(f, a, b);
  heap.push(first);
  double total = first.value, err = first.error;
  out.evaluations = 15;
  int intervals = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (intervals >= max_intervals) break;
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;  // interval cannot be split further in floating point
    }
    Segment l = kronrod15(f, worst.a, mid);
    Segment r = kronrod15(f, mid, worst.b);
    out.evaluations += 30;
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++intervals;
  }
  // Re-sum to remove drift from the incremental updates.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.converged = err <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double abs_tol, int max_intervals) {
  QuadResult r = gauss_kronrod(f, a, b, rel_tol, abs_tol, max_intervals);
  if (!r.converged || !std::isfinite(r.value)) {
    throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]",
                         r.error);
  }
  return r.value;
}

QuadResult tanh_sinh(const std::function<double(double, double, double)>& f, double a, double b,
                     double rel_tol, int max_levels) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  constexpr double kTmax = 6.0;
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);

  // One abscissa pair at parameter t > 0 plus its mirror; returns weighted sum.
  auto pair = [&](double t, int& evals) {
    const double u = kHalfPi * std::sinh(t);
    const double ch = std::cosh(u);
    const double w = kHalfPi * std::cosh(t) / (ch * ch);
    if (!(w > 1e-300)) return 0.0;
    // distance of the abscissa from the nearer endpoint, relative to hw
    const double d = 2.0 / (1.0 + std::exp(2.0 * u));
    const double off = 1.0 - d;  // tanh(u)
    double s = 0.0;
    const double dx = hw * d;
    if (dx > 0.0) {
      const double vr = f(c + hw * off, 2.0 * hw - dx, dx);
      const double vl = f(c - hw * off, dx, 2.0 * hw - dx);
      evals += 2;
      if (std::isfinite(vr)) s += w * vr;
      if (std::isfinite(vl)) s += w * vl;
    }
    return s;
  };

  QuadResult out;
  double h = 1.0;
  double sum = kHalfPi * f(c, hw, hw);
  out.evaluations = 1;
  for (double t = h; t <= kTmax; t += h) sum += pair(t, out.evaluations);
  double prev = sum * h * hw;
  for (int level = 1; level <= max_levels; ++level) {
    h *= 0.5;
    for (double t = h; t <= kTmax; t += 2.0 * h) sum += pair(t, out.evaluations);
    const double cur = sum * h * hw;
    out.error = std::abs(cur - prev);
    out.value = cur;
    if (level >= 3 && out.error <= rel_tol * std::abs(cur)) {
      out.converged = true;
      return out;
    }
    prev = cur;
  }
  return out;
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix of Legendre polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).array().square().transpose();
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace plap
