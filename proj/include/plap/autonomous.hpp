#pragma once

#include <Eigen/Dense>
#include <utility>

#include "plap/potential.hpp"
#include "plap/spline.hpp"

namespace plap {

/// Orbit state of -(phi_p(v'))' + a W'(v) = 0: position v and momentum
/// w = phi_p(v').
struct PhasePoint {
  double v = 0.0;
  double w = 0.0;
};

/// H_a = -(1/a) L(v') + W(v) with v' = phi_{p*}(w).
double energy(const PhasePoint& z, double a, const DoubleWellPotential& Wd);

/// Time spent on one side of v = 0 during one period at energy xi:
/// 2 int_0^{h_+-} ds / L_+^{-1}(a (W(s) - xi)). sign > 0 selects v > 0.
double half_time(double xi, double a, const DoubleWellPotential& Wd, int sign);

/// Period T_a(xi) of the closed orbit at energy 0 < xi < W_0.
double time_map(double xi, double a, const DoubleWellPotential& Wd);

/// Averaged kinetic energy K_a(xi) = (1/T_a) int_0^{T_a} L(v'), computed in
/// position space.
double kinetic_avg(double xi, double a, const DoubleWellPotential& Wd);

/// Both quantities from one set of quadratures.
std::pair<double, double> time_and_kinetic(double xi, double a, const DoubleWellPotential& Wd);

struct TableGrid {
  int nodes = 256;
  double delta = 1e-10;  // relative distance of the end nodes from 0 and W_0
};

/// T and K tabulated in sigma = log(xi / (W_0 - xi)), which refines the grid
/// logarithmically toward both 0 and W_0. Nodes are uniform in u with
/// sigma = S sinh(k u) / sinh(k), a mild clustering in the middle range where
/// T and K bend most. log T and log K are splined in sigma; the cumulative
/// G(E) = int_0^E dxi / K(xi) is integrated from the spline.
class TimeMapTable {
 public:
  TimeMapTable() = default;
  TimeMapTable(const DoubleWellPotential& Wd, double a, const TableGrid& grid = {});

  const Eigen::VectorXd& xi_grid() const { return xi_; }
  const Eigen::VectorXd& t_values() const { return t_; }
  const Eigen::VectorXd& k_values() const { return k_; }
  double a_ref() const { return a_; }
  double w_zero() const { return w0_; }
  double p() const { return p_; }

  /// Interpolated period; +infinity at xi <= 0, the small-oscillation limit
  /// at xi >= W_0.
  double T(double xi) const;
  /// Interpolated K, with K(0) = K(W_0) = 0.
  double K(double xi) const;
  /// G(E) = int_0^E dxi/K; throws DomainError for E >= W_0 or E < 0.
  double G(double E) const;
  /// Inverse of G on [0, +inf).
  double G_inv(double y) const;

  double sigma(double xi) const;
  double xi_of_sigma(double s) const;

 private:
  static constexpr double kStretch = 2.5;
  double sigma_of_u(double u) const;
  double dxi_ds_over_k(double s) const;
  double G_sigma(double s) const;  // G at a point inside the tabulated range

  double a_ = 1.0, w0_ = 0.0, p_ = 2.0, t_limit_ = 0.0, smax_ = 1.0, sinh_k_ = 1.0;
  Eigen::VectorXd sig_, xi_, t_, k_, g_;
  CubicSpline logt_, logk_;
  // 1/K ~ alpha + beta log(1/xi) below the first node; K ~ c (W_0 - xi) above the last
  double alpha_ = 0.0, beta_ = 0.0, c_top_ = 0.0;
};

inline TimeMapTable build_table(const DoubleWellPotential& Wd, double a,
                                const TableGrid& grid = {}) {
  return TimeMapTable(Wd, a, grid);
}

struct Heteroclinic {
  Eigen::VectorXd x_grid, v_values, vprime_values;
  double a_ref = 1.0;
  double max_energy_error = 0.0;
};

/// Zero-energy orbit from -1 to 1 with v(0) = 0 on [-x_max, x_max], sampled
/// with spacing dx.
Heteroclinic heteroclinic_orbit(double a, const DoubleWellPotential& Wd, double x_max,
                                double dx = 1e-2);

/// int_R L(v') dx along the heteroclinic, evaluated in position space.
double heteroclinic_action(double a, const DoubleWellPotential& Wd);

struct BoundaryPair {
  double M = 0.0;
  double xi_plus = 0.0, xi_minus = 0.0;  // energy levels of the two arches
  double v_plus0 = 0.0, v_minus0 = 0.0;  // values at the midpoint
  Eigen::VectorXd x_grid, v_plus, v_minus;
};

/// Smallest half-length admitting one-signed arches vanishing at +-M.
double boundary_pair_threshold(double a, const DoubleWellPotential& Wd, int sign = +1);

/// Positive and negative solutions on [-M, M] vanishing at +-M.
BoundaryPair boundary_pair(double M, double a, const DoubleWellPotential& Wd, int samples = 401);

}  // namespace plap
