#pragma once

#include <Eigen/Dense>
#include <algorithm>

namespace plap {

/// Finite-difference weights (Fornberg's recursion) for the m-th derivative at
/// z from samples at nodes x. Returns the weights for derivative order m.
inline Eigen::VectorXd fornberg_weights(double z, const Eigen::VectorXd& x, int m) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
  double c1 = 1.0, c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const Eigen::Index mn = std::min<Eigen::Index>(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (Eigen::Index k = mn; k >= 1; --k)
          c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (Eigen::Index k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c.col(m);
}

/// First derivative of samples f on a (possibly nonuniform) grid x, using a
/// stencil of `width` nodes centered where possible.
inline Eigen::VectorXd fd_derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& f,
                                     int width = 5) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd d(n);
  const Eigen::Index w = std::min<Eigen::Index>(width, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::clamp<Eigen::Index>(i - w / 2, 0, n - w);
    const Eigen::VectorXd wts = fornberg_weights(x[i], x.segment(lo, w), 1);
    d[i] = wts.dot(f.segment(lo, w));
  }
  return d;
}

}  // namespace plap
