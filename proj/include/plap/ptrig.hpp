#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

namespace plap {

/// Exponent pair (p, p*) with the derived constants pi_p and gamma_p.
class PExponent {
 public:
  static constexpr double kMinP = 1.1;
  static constexpr double kMaxP = 10.0;

  explicit PExponent(double p);

  double p() const { return p_; }
  double p_star() const { return p_star_; }
  double pi_p() const { return pi_p_; }
  /// Landau constant: 1/(p-1) for p < 2, otherwise 1.
  double gamma_p() const { return gamma_p_; }

 private:
  double p_, p_star_, pi_p_, gamma_p_;
};

inline double phi(double s, double q) {
  if (s == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(s), q - 1.0), s);
}

inline double phi_p(double s, const PExponent& P) { return phi(s, P.p()); }
inline double phi_p_inv(double t, const PExponent& P) { return phi(t, P.p_star()); }
inline double big_L(double s, const PExponent& P) {
  return std::pow(std::abs(s), P.p()) / P.p_star();
}
/// (p* y)^{1/p}; throws DomainError for y < 0.
double big_L_plus_inv(double y, const PExponent& P);

inline Eigen::ArrayXd phi_p(const Eigen::ArrayXd& s, const PExponent& P) {
  return s.unaryExpr([&](double v) { return phi_p(v, P); });
}
inline Eigen::ArrayXd phi_p_inv(const Eigen::ArrayXd& t, const PExponent& P) {
  return t.unaryExpr([&](double v) { return phi_p_inv(v, P); });
}
inline Eigen::ArrayXd big_L(const Eigen::ArrayXd& s, const PExponent& P) {
  return s.abs().pow(P.p()) / P.p_star();
}

/// pi_p = 2 (p-1)^{1/p} int_0^1 (1 - s^p)^{-1/p} ds, with the endpoint
/// singularity removed by substitution before adaptive quadrature.
double compute_pi_p(double p);
inline double compute_pi_p(const PExponent& P) { return compute_pi_p(P.p()); }

/// Tabulated p-cosine / p-sine on a quarter period.
///
/// Nodes come from integrating C' = -phi_{p*}(S), S' = phi_p(C) inward from
/// both ends of [0, pi_p/2]; evaluation steps from the nearest node and
/// projects onto |C|^p/p + |S|^{p*}/p* = 1/p.
class PTrig {
 public:
  explicit PTrig(double p, int nodes = 513);

  double p() const { return p_; }
  double pi_p() const { return pi_p_; }
  /// (C_p(theta), S_p(theta)) for any real theta.
  std::pair<double, double> cs(double theta) const;
  double cos(double theta) const { return cs(theta).first; }
  double sin(double theta) const { return cs(theta).second; }
  /// Angle in [0, 2 pi_p) of a point on the p-circle F(c, s) = 1 (the
  /// point is projected first), computed from the inverse integrals.
  double angle(double c, double s) const;
  /// Difference between forward and backward sweeps at pi_p/4 (build check).
  double seam_mismatch() const { return seam_; }

  /// Shared instance for exponent p (built once per p, thread-safe).
  static std::shared_ptr<const PTrig> get(double p);

 private:
  std::pair<double, double> quarter(double t) const;  // t in [0, pi_p/2]
  void project(double& c, double& s) const;

  double p_, q_, pi_p_, dt_, seam_ = 0.0;
  std::vector<double> c_, s_;
};

double p_cosine(double theta, const PExponent& P);
double p_sine(double theta, const PExponent& P);

}  // namespace plap
