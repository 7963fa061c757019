#pragma once

#include <Eigen/Dense>
#include <functional>

namespace plap {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int evaluations = 0;
  bool converged = false;
};

/// Adaptive 15-point Gauss-Kronrod quadrature with global bisection of the
/// interval carrying the largest error estimate.
QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                         double rel_tol = 1e-12, double abs_tol = 0.0, int max_intervals = 2000);

/// Same as gauss_kronrod but throws NumericalError when the tolerance is not met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double abs_tol = 0.0, int max_intervals = 2000);

/// Double-exponential (tanh-sinh) quadrature on [a, b].
///
/// The integrand receives (x, x - a, b - x) with the two endpoint distances
/// computed without cancellation, so endpoint-singular integrands can be
/// evaluated accurately arbitrarily close to the ends.
QuadResult tanh_sinh(const std::function<double(double, double, double)>& f, double a,
                     double b, double rel_tol = 1e-12, int max_levels = 12);

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch). Rules are cached per order.
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
const GaussRule& gauss_legendre(int n);

/// Fixed-order Gauss-Legendre approximation of the integral over [a, b].
template <class F>
double gauss_fixed(F&& f, double a, double b, int n = 10) {
  const GaussRule& r = gauss_legendre(n);
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + hw * r.nodes[i]);
  return s * hw;
}

}  // namespace plap
