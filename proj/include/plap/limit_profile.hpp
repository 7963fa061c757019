#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "plap/autonomous.hpp"
#include "plap/weight.hpp"

namespace plap {

/// Shape of a connected component of {E > 0}.
enum class SupportType {
  kInterior,  // (s, t) with a(s) = a(t) and a > a(s) inside
  kRightEnd,  // (s, 1] with a > a(s) on (s, 1]
  kLeftEnd,   // [0, t) with a > a(t) on [0, t)
};

struct SupportInterval {
  double s = 0.0, t = 1.0;
  SupportType type = SupportType::kInterior;
};

struct SupportSpec {
  std::vector<SupportInterval> intervals;
  double rel_tol = 1e-8;     // for a(s) = a(t) on interior components
  bool exact_match = false;  // require a(s) == a(t) bit for bit
  int samples = 2000;        // sampling density of the a(x) > a(edge) checks
};

/// Throws ValidationError naming the violated invariant.
void validate_support(const SupportSpec& A, const WeightFunction& a);

struct EnergyProfile {
  Eigen::VectorXd x_grid, e_values;
  SupportSpec support;
  double w_zero = 0.0;

  /// Piecewise linear interpolation of the samples.
  double operator()(double x) const;
};

/// G(E) = int_0^E dxi / K(xi) for the unit-weight K, from a table built at
/// any reference weight (K_1 = K_a / a).
double k_antiderivative(double E, const TimeMapTable& table);
double k_antiderivative_inv(double y, const TimeMapTable& table);

/// Unit-weight K from a table built at any reference weight; K(0) = K(W_0) = 0.
double unit_k(double xi, const TimeMapTable& table);

/// Unit-weight period T_1 = a^{1/p} T_a; +infinity at xi <= 0.
double unit_t(double xi, const TimeMapTable& table);

/// Local zero density 2 a^{1/p} / T(E), taken as 0 at E = 0 and as
/// a^{1/p} C_0^{1/p} / pi_p at E >= W_0 (the small-oscillation limit).
double zero_density(double a_value, double E, const TimeMapTable& table);

/// Exact profile value at x: G^{-1}(log(a(x)/a(edge))) on components, 0 off A.
double profile_value(const SupportSpec& A, const WeightFunction& a, const TimeMapTable& table,
                     double x);

struct ProfileGrid {
  int uniform = 2001;        // base uniform nodes on [0, 1]
  double first = 1e-9;       // first graded offset from a component edge
  double ratio = 1.01;       // geometric growth of the graded offsets
};

/// Profile vanishing exactly off A. The grid contains every component edge
/// and is graded geometrically toward them, where E is only Hoelder-like.
EnergyProfile construct_profile(const SupportSpec& A, const WeightFunction& a,
                                const TimeMapTable& table, const ProfileGrid& grid = {});

/// |dE/dx - (a'/a) K(E)| at every grid node, with three-point differences on
/// the nonuniform grid. Nodes whose stencil straddles a component edge
/// (where E has a corner by construction) and the two ends get 0.
Eigen::VectorXd profile_residuals(const EnergyProfile& E, const WeightFunction& a,
                                  const TimeMapTable& table);
double profile_residual(const EnergyProfile& E, const WeightFunction& a,
                        const TimeMapTable& table);

/// int_lo^hi 2 a^{1/p} / T(E(x)) dx along the exact profile of A.
double zero_count_integral(const SupportSpec& A, const WeightFunction& a,
                           const TimeMapTable& table, double lo = 0.0, double hi = 1.0);

/// Independent construction: integrates E' = (a'/a) K(E) from E = delta at
/// the vanishing edge(s) of one component, for delta and delta/2, and returns
/// the linear extrapolation to delta = 0 at the points xs (inside the
/// component). Interior components are integrated inward from both edges and
/// split at the maximum of a.
Eigen::VectorXd forward_profile(const SupportInterval& comp, const WeightFunction& a,
                                const std::function<double(double)>& K, const Eigen::VectorXd& xs,
                                double delta = 1e-7);

}  // namespace plap
