#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "plap/ptrig.hpp"

namespace plap {

using ScalarFn = std::function<double(double)>;

/// Double-well potential W on [-1, 1] with wells at +-1 and maximum W_0 at 0,
/// extended outside [-1, 1] by (C_{+-1}/p)|u -+ 1|^p.
class DoubleWellPotential {
 public:
  struct Spec {
    std::string name;
    double p = 2.0;
    ScalarFn w;        // on [-1, 1]
    ScalarFn w_prime;  // on [-1, 1]
    ScalarFn drop;     // W_0 - W on [-1, 1]; optional, derived from w if empty
    double c_minus1 = 0.0, c_zero = 0.0, c_one = 0.0, w_zero = 0.0;
  };

  explicit DoubleWellPotential(Spec spec);

  double w(double u) const;
  double w_prime(double u) const;
  /// W_0 - W(u), evaluated without cancellation where the spec allows.
  double drop(double u) const;
  double operator()(double u) const { return w(u); }

  const PExponent& pexp() const { return impl_->pexp; }
  double p() const { return impl_->pexp.p(); }
  double c_minus1() const { return impl_->spec.c_minus1; }
  double c_zero() const { return impl_->spec.c_zero; }
  double c_one() const { return impl_->spec.c_one; }
  double w_zero() const { return impl_->spec.w_zero; }
  const std::string& name() const { return impl_->spec.name; }

  /// Roots h_-(xi) < 0 < h_+(xi) of W(u) = xi, 0 < xi < W_0.
  std::pair<double, double> h_pm(double xi) const;
  /// Single branch: sign > 0 gives h_+, sign < 0 gives h_-.
  double h_branch(double xi, int sign) const;

 private:
  struct Impl {
    Spec spec;
    PExponent pexp;
  };
  std::shared_ptr<const Impl> impl_;
};

DoubleWellPotential make_allen_cahn(const PExponent& P);
DoubleWellPotential make_pendulum(const PExponent& P);
DoubleWellPotential make_custom(const PExponent& P, std::string name, ScalarFn w, ScalarFn w_prime,
                                double c_minus1, double c_zero, double c_one, double w_zero);

inline std::pair<double, double> h_pm(double xi, const DoubleWellPotential& Wd) {
  return Wd.h_pm(xi);
}

struct PotentialReport {
  int grid_size = 0;
  // observed limit ratios of the (W1) expansions
  double ratio_plus_one = 0.0;   // W(u) / ((C_1/p)(1-u)^p) at u = 1 - 1e-3
  double ratio_minus_one = 0.0;  // W(u) / ((C_{-1}/p)(1+u)^p) at u = -1 + 1e-3
  double ratio_zero = 0.0;       // (W_0 - W(u)) / ((C_0/p)|u|^p) at u = 1e-3
  double max_abs_ends = 0.0;     // max of |W(+-1)|, |W'(+-1)|, |W'(0)|
  std::vector<std::string> checks;  // invariants that were verified
};

/// Audit a potential on a grid. Throws ValidationError naming the violated
/// invariant and the witness point.
PotentialReport validate_potential(const DoubleWellPotential& Wd, int grid_size = 2001,
                                   double ratio_tol = 5e-2);

}  // namespace plap
