#pragma once

#include <Eigen/Dense>
#include <vector>

#include "plap/autonomous.hpp"
#include "plap/bvp_solver.hpp"
#include "plap/limit_profile.hpp"
#include "plap/potential.hpp"
#include "plap/weight.hpp"

namespace plap {

/// E_eps = -(1/a) L(eps u') + W(u) at the grid nodes, with
/// |E_eps' - (a'/a^2) L(eps u')| from three-point differences. The grid is
/// split at junctions (interior nodes with u = 0), where one-sided stencils
/// are used on each side.
struct EnergyTrace {
  Eigen::VectorXd x_grid, e_values, residuals;
  double max_residual = 0.0;
};

EnergyTrace energy_trace(const BVPSolution& sol, const WeightFunction& a,
                         const DoubleWellPotential& Wd);
/// Same on raw samples; w is the momentum phi_p(eps u'). At junctions the
/// one-sided momenta are recovered from the adjacent cells as in the solver.
EnergyTrace energy_trace(double eps, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w, const WeightFunction& a,
                         const DoubleWellPotential& Wd);

/// Sup-norm Landau-Kolmogorov inequality for psi = phi_p(v'):
///   ||psi||^{p*} <= 4 gamma_p ||v|| ||psi'||
/// and the coarse bound ||psi|| <= 2^{p-1} ||v||^{p-1} + ||psi'||.
struct LandauReport {
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
  double coarse_lhs = 0.0, coarse_rhs = 0.0, coarse_margin = 0.0;
};

/// v' from five-point differences. Throws ValidationError if
/// |v'(0)| or |v'(1)| exceeds end_tol * max(1, ||v'||).
LandauReport landau_check(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const PExponent& P,
                          double end_tol = 1e-6);
/// With v' supplied.
LandauReport landau_check(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& vprime, const PExponent& P,
                          double end_tol = 1e-6);

/// Zeros of a solution: the junctions when recorded, otherwise the linear
/// interpolants of the sign changes of u.
Eigen::VectorXd solution_zeros(const BVPSolution& sol);

struct ZeroCountLevel {
  double eps = 0.0;
  int zeros = 0;
  double eps_z = 0.0, rel_error = 0.0;  // rel_error: |eps z - I| / I (absolute if I = 0)
  std::vector<int> block_zeros;
  std::vector<double> block_rel_error;
};

struct ZeroCountReport {
  double integral = 0.0;  // int_0^1 2 a^{1/p} / T(E)
  std::vector<double> block_integrals;
  std::vector<ZeroCountLevel> levels;  // in the order of the input sweep
  /// rel_error strictly decreasing over the last k levels (k - 1 steps).
  bool decreasing_last(int k) const;
};

/// Blocks are the support components of E; zeros are attributed to a block
/// when they lie in its junction window (if recorded) or in [s, t].
ZeroCountReport zero_count_report(const std::vector<BVPSolution>& sweep, const EnergyProfile& E,
                                  const WeightFunction& a, const TimeMapTable& table);

struct AccumulationLevel {
  double eps = 0.0;
  double support_to_zeros = 0.0;  // max over supp E of the distance to the nearest zero
  double zeros_to_set = 0.0;      // max over zeros of the distance to supp E u {a' = 0} u {0, 1}
  double spacing_min = 0.0, spacing_max = 0.0;  // gap / (eps T_a(E)/2) inside supp E
};

struct AccumulationReport {
  std::vector<double> critical_points;  // sampled zeros of a'
  std::vector<AccumulationLevel> levels;
  bool support_distance_shrinks() const;  // strictly decreasing
  bool zero_distance_shrinks() const;     // non-increasing
};

AccumulationReport accumulation_report(const std::vector<BVPSolution>& sweep,
                                       const EnergyProfile& E, const WeightFunction& a,
                                       const TimeMapTable& table, int samples = 400);

/// Log-linear fit of |sigma u - 1| + |eps u'| against d = min(x - s, t - x)/eps
/// on intervals where sigma u stays in [0, 1] (sigma = sign of u inside).
/// K2 is the least-squares slope; K1 is the smallest constant for which the
/// envelope K1 exp(-K2 d) dominates `quantile` of the samples.
struct LayerDecayFit {
  double K1 = 0.0, K2 = 0.0;
  double coverage = 0.0;  // fraction of samples under the envelope
  int samples = 0;
  double plateau_gap = 0.0;  // max |sigma u - 1| over the middle third of the intervals
};

struct DecayInterval {
  double s = 0.0, t = 1.0;
};

LayerDecayFit layer_decay_check(double eps, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& uprime,
                                const std::vector<DecayInterval>& intervals,
                                double quantile = 0.99, double floor = 1e-13);
LayerDecayFit layer_decay_check(const BVPSolution& sol, const std::vector<DecayInterval>& intervals,
                                double quantile = 0.99, double floor = 1e-13);

}  // namespace plap
