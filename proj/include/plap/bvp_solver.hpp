#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "plap/autonomous.hpp"
#include "plap/limit_profile.hpp"
#include "plap/ode.hpp"
#include "plap/potential.hpp"
#include "plap/weight.hpp"

namespace plap {

enum class BoundaryKind { kDirichletDirichlet, kNeumannDirichlet, kDirichletNeumann };

struct PieceOptions {
  double tol = 1e-12;  // max |Euler-Lagrange residual| at free nodes
  int max_iter = 400;
  bool eigen_test = true;  // trivial minimizer when the linearization has no zero
};

/// Discrete minimizer of I_eps(s, t; u) = int (eps^p/p)|u'|^p + a W(u) over
/// continuous piecewise linear u on a uniform grid of `cells` cells, with
/// sign * u >= 0 and u = 0 at Dirichlet ends. The potential term uses nodal
/// (trapezoidal) quadrature, which makes the discrete Euler-Lagrange equations
///   -eps^p (phi_p(D_i) - phi_p(D_{i-1})) / h + a_i W'(u_i) = 0
/// a conservative three-point scheme for the momentum w = phi_p(eps u').
struct PieceMinimizer {
  double eps = 0.0, s = 0.0, t = 1.0;
  int sign = 1;
  BoundaryKind kind = BoundaryKind::kDirichletDirichlet;
  Eigen::VectorXd x_grid, u_values;
  Eigen::VectorXd w_values;  // nodal momentum phi_p(eps u'), recovered from the fluxes
  double m_value = 0.0;
  double d_left = 0.0, d_right = 0.0;  // one-sided u' at s and t
  double dm_ds = 0.0, dm_dt = 0.0;     // exact derivatives of the discrete m
  bool trivial = false;
  double residual = 0.0;  // max Euler-Lagrange residual at free nodes
  int iterations = 0;
  double zero_level = 0.0;  // W_0 int_s^t a with the same quadrature
};

PieceMinimizer minimize_piece(double eps, double s, double t, int sign, BoundaryKind kind,
                              const WeightFunction& a, const DoubleWellPotential& Wd, int cells,
                              const Eigen::VectorXd* warm = nullptr,
                              const PieceOptions& opt = {});

/// (dm/ds, dm/dt) from the endpoint derivatives:
///   dm/ds =  (eps^p/p*)|u'(s)|^p - a(s) W(u(s)) ... with u(s) = 0 at Dirichlet ends
///   dm/dt = -(eps^p/p*)|u'(t)|^p + a(t) W(u(t))
std::pair<double, double> m_partials(const PieceMinimizer& pm, const WeightFunction& a,
                                     const DoubleWellPotential& Wd);

/// State along a solution or trajectory: u and the momentum w = phi_p(eps u').
struct Trajectory {
  double eps = 0.0;
  std::vector<double> x, u, w;
};

/// Integrates u' = phi_{p*}(w)/eps, w' = a W'(u)/eps from x0 to x_end (either
/// direction), recording every accepted step. `stop(x, u, w)` may end the run
/// early by returning true.
Trajectory shoot_ivp(double eps, double x0, double u0, double w0, double x_end,
                     const WeightFunction& a, const DoubleWellPotential& Wd,
                     const OdeOptions& opt = {1e-11, 1e-13},
                     const std::function<bool(double, double, double)>& stop = nullptr);

/// Sign changes on (x0, x1) of the linearization at u = 0,
///   eps (phi_p(eps v'))' + C_0 a phi_p(v) = 0,
/// started from (v, w) = (v0, w0) at x0.
int linearized_zero_count(double eps, double x0, double v0, double w0, double x1,
                          const WeightFunction& a, const DoubleWellPotential& Wd);

/// Number of negative Dirichlet eigenvalues on (s, t): zeros in (s, t) of the
/// linearization started from v(s) = 0, v'(s) = 1.
int count_eigenvalues(double eps, double s, double t, const WeightFunction& a,
                      const DoubleWellPotential& Wd);

/// g(u) = (p (W_0 - W(u)))^{1/p} sgn(u) and its derivative.
double prufer_g(double u, const DoubleWellPotential& Wd);
double prufer_g_prime(double u, const DoubleWellPotential& Wd);

/// Continuous Prufer angle along a trajectory, defined by
///   a^{1/p} g(u) = r^{2/p} C_p(theta),  w = r^{2/p*} S_p(theta).
/// theta decreases by pi_p between consecutive zeros of u.
Eigen::VectorXd prufer_angle(const Trajectory& tr, const WeightFunction& a,
                             const DoubleWellPotential& Wd);

struct Block {
  double s = 0.0, t = 1.0;
  int count = 0;  // number of junctions inside the window; 0: from the zero density
};

struct Partition {
  Eigen::VectorXd tau;
  std::vector<int> counts;                          // per block
  std::vector<std::pair<double, double>> windows;  // [s_i - h_0, t_i + h_0]
  double h0 = 0.0;
  std::vector<double> density_integrals;  // int_{s_i}^{t_i} 2 a^{1/p}/T(E)
};

struct BVPSolution {
  double eps = 0.0;
  Eigen::VectorXd x_grid, u_values, uprime_values, w_values;
  Partition tau_star;
  Eigen::VectorXd zero_locations;
  std::vector<PieceMinimizer> pieces;
  double f_value = 0.0;
  double el_residual = 0.0;        // max over pieces of the discrete residual
  double junction_mismatch = 0.0;  // max ||u'_left| - |u'_right|| at the tau_j
  double junction_flux_mismatch = 0.0;  // same from recovered fluxes (discretization check)
  double neumann_left = 0.0, neumann_right = 0.0;  // |u'(0)|, |u'(1)|
  int newton_steps = 0;
  int sweeps = 0;
  Trajectory trajectory() const;
};

struct PartitionOptions {
  double cells_per_eps = 384.0;
  int min_cells = 64;
  double h0 = 0.0;          // 0: detected from the sign of a'
  double grad_tol = 1e-10;  // on |df/dtau_j|
  int max_newton = 60;
  int coordinate_sweeps = 2;
  unsigned jobs = 1;
  PieceOptions piece;
};

/// Largest margin h (sampled) with a' > 0 on [s_i - h, s_i] and a' < 0 on
/// [t_i, t_i + h] for every block, keeping the windows disjoint inside [0, 1].
/// Throws ValidationError if a'(s_i) > 0 > a'(t_i) fails.
double detect_h0(const std::vector<Block>& blocks, const WeightFunction& a);

/// Maximizes f(tau) = sum_j m_{(-)^j}(eps; tau_j, tau_{j+1}) over ordered
/// junctions in the block windows, then assembles u_eps from the piece
/// minimizers. The block supports define the target profile through `table`,
/// which fixes the counts and the starting junctions.
std::pair<Partition, BVPSolution> maximize_partition(double eps, const std::vector<Block>& blocks,
                                                     const WeightFunction& a,
                                                     const DoubleWellPotential& Wd,
                                                     const TimeMapTable& table,
                                                     const PartitionOptions& opt = {});

}  // namespace plap
