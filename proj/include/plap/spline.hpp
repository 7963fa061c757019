#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <vector>

#include "plap/errors.hpp"

namespace plap {

/// Cubic spline through (x_i, y_i) with not-a-knot end conditions.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
    const Eigen::Index n = x_.size();
    if (n < 4 || y_.size() != n) throw DomainError("CubicSpline: need >= 4 matching samples");
    for (Eigen::Index i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw DomainError("CubicSpline: abscissae not increasing");
    // Second derivatives M from the (nearly tridiagonal) moment equations.
    Eigen::VectorXd h = x_.tail(n - 1) - x_.head(n - 1);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 1; i < n - 1; ++i) {
      trip.emplace_back(i, i - 1, h[i - 1]);
      trip.emplace_back(i, i, 2.0 * (h[i - 1] + h[i]));
      trip.emplace_back(i, i + 1, h[i]);
      r[i] = 6.0 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
    }
    // not-a-knot: third derivative continuous at x_1 and x_{n-2}
    trip.emplace_back(0, 0, h[1]);
    trip.emplace_back(0, 1, -(h[0] + h[1]));
    trip.emplace_back(0, 2, h[0]);
    trip.emplace_back(n - 1, n - 3, h[n - 2]);
    trip.emplace_back(n - 1, n - 2, -(h[n - 3] + h[n - 2]));
    trip.emplace_back(n - 1, n - 1, h[n - 3]);
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    m_ = lu.solve(r);
  }

  double operator()(double t) const {
    const Eigen::Index i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double derivative(double t) const {
    const Eigen::Index i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
  }

  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }

 private:
  Eigen::Index segment(double t) const {
    const double* b = x_.data();
    const double* e = b + x_.size();
    Eigen::Index i = std::upper_bound(b, e, t) - b - 1;
    return std::clamp<Eigen::Index>(i, 0, x_.size() - 2);
  }

  Eigen::VectorXd x_, y_, m_;
};

/// Piecewise cubic Hermite interpolant on a uniform grid with known slopes.
class UniformHermite {
 public:
  UniformHermite() = default;
  UniformHermite(double x0, double dx, std::vector<double> y, std::vector<double> dy)
      : x0_(x0), dx_(dx), y_(std::move(y)), dy_(std::move(dy)) {}

  double operator()(double t) const {
    const double s = (t - x0_) / dx_;
    const long last = static_cast<long>(y_.size()) - 2;
    const long i = std::clamp(static_cast<long>(s), 0L, last);
    const double u = s - static_cast<double>(i);
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y_[i] + (u3 - 2 * u2 + u) * dx_ * dy_[i] +
           (-2 * u3 + 3 * u2) * y_[i + 1] + (u3 - u2) * dx_ * dy_[i + 1];
  }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> y_, dy_;
};

}  // namespace plap
