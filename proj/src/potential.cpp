#include "plap/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/quadrature.hpp"
#include "plap/roots.hpp"
#include "plap/spline.hpp"

namespace plap {

DoubleWellPotential::DoubleWellPotential(Spec spec) {
  PExponent P(spec.p);
  if (!spec.w || !spec.w_prime) throw DomainError("potential: w and w_prime are required");
  if (!(spec.w_zero > 0.0) || !(spec.c_zero > 0.0) || !(spec.c_one > 0.0) ||
      !(spec.c_minus1 > 0.0)) {
    throw DomainError("potential: constants C_-1, C_0, C_1, W_0 must be positive");
  }
  if (!spec.drop) {
    const double w0 = spec.w_zero;
    ScalarFn w = spec.w;
    spec.drop = [w0, w](double u) { return w0 - w(u); };
  }
  impl_ = std::make_shared<const Impl>(Impl{std::move(spec), P});
}

double DoubleWellPotential::w(double u) const {
  const Spec& s = impl_->spec;
  const double p = impl_->pexp.p();
  if (u > 1.0) return s.c_one / p * std::pow(u - 1.0, p);
  if (u < -1.0) return s.c_minus1 / p * std::pow(-1.0 - u, p);
  return s.w(u);
}

double DoubleWellPotential::w_prime(double u) const {
  const Spec& s = impl_->spec;
  const double p = impl_->pexp.p();
  if (u > 1.0) return s.c_one * std::pow(u - 1.0, p - 1.0);
  if (u < -1.0) return -s.c_minus1 * std::pow(-1.0 - u, p - 1.0);
  return s.w_prime(u);
}

double DoubleWellPotential::drop(double u) const {
  if (std::abs(u) > 1.0) return w_zero() - w(u);
  return impl_->spec.drop(u);
}

double DoubleWellPotential::h_branch(double xi, int sign) const {
  const double w0 = w_zero();
  if (!(xi > 0.0 && xi < w0)) {
    std::ostringstream os;
    os << "h_pm: energy " << xi << " outside (0, W_0 = " << w0 << ")";
    throw DomainError(os.str());
  }
  const double sg = sign > 0 ? 1.0 : -1.0;
  if (xi > 0.5 * w0) {
    const double gap = w0 - xi;
    return sg * bracketed_root([&](double v) { return gap - drop(sg * v); }, 0.0, 1.0);
  }
  return sg * bracketed_root([&](double v) { return w(sg * v) - xi; }, 0.0, 1.0);
}

std::pair<double, double> DoubleWellPotential::h_pm(double xi) const {
  return {h_branch(xi, -1), h_branch(xi, +1)};
}

DoubleWellPotential make_allen_cahn(const PExponent& P) {
  const double p = P.p();
  DoubleWellPotential::Spec s;
  s.name = "allen_cahn";
  s.p = p;
  const double inv = 1.0 / (p * p);
  // 1 - |u|^p computed as -expm1(p log|u|) to keep accuracy near the wells
  s.w = [p, inv](double u) {
    const double a = std::abs(u);
    if (a == 0.0) return inv;
    return inv * std::pow(-std::expm1(p * std::log(a)), p);
  };
  s.w_prime = [p](double u) {
    const double a = std::abs(u);
    if (a == 0.0) return 0.0;
    return -std::pow(-std::expm1(p * std::log(a)), p - 1.0) * phi(u, p);
  };
  s.drop = [p, inv](double u) {
    const double a = std::abs(u);
    if (a == 0.0) return 0.0;
    return -inv * std::expm1(p * std::log1p(-std::pow(a, p)));
  };
  s.w_zero = inv;
  s.c_zero = 1.0;
  s.c_one = s.c_minus1 = std::pow(p, p - 1.0);
  return DoubleWellPotential(std::move(s));
}

namespace {

// sin(pi u) on [-1, 1], exact zeros at u = 0, +-1
double sin_pi(double u) {
  const double a = std::abs(u);
  return std::copysign(std::sin(std::numbers::pi * (a > 0.5 ? 1.0 - a : a)), u);
}

// F(d) = int_0^d sin(pi r)^{p-1} dr on [0, 1/2]
class PendulumPrimitive {
 public:
  static constexpr int kCells = 2048;
  static constexpr int kDirect = 64;  // cells near 0 evaluated without the table

  explicit PendulumPrimitive(double p) : p_(p), h_(0.5 / kCells) {
    std::vector<double> F(kCells + 1), f(kCells + 1);
    for (int k = 0; k <= kCells; ++k) f[k] = integrand(k * h_);
    for (int k = 0; k <= kDirect; ++k) F[k] = direct(k * h_);
    for (int k = kDirect; k < kCells; ++k) {
      F[k + 1] = F[k] + gauss_fixed([&](double r) { return integrand(r); }, k * h_, (k + 1) * h_, 10);
    }
    table_ = UniformHermite(0.0, h_, std::move(F), std::move(f));
  }

  double operator()(double d) const {
    if (d <= 0.0) return 0.0;
    if (d < kDirect * h_) return direct(d);
    return table_(d);
  }

  double integrand(double r) const { return std::pow(std::sin(std::numbers::pi * r), p_ - 1.0); }

 private:
  // (d^p/p) int_0^1 (sin(pi d t^{1/p}) / (d t^{1/p}))^{p-1} dt, smooth near d = 0
  double direct(double d) const {
    if (d == 0.0) return 0.0;
    const double p = p_;
    auto g = [d, p](double t) {
      const double rho = d * std::pow(t, 1.0 / p);
      const double ratio = rho == 0.0 ? std::numbers::pi : std::sin(std::numbers::pi * rho) / rho;
      return std::pow(ratio, p - 1.0);
    };
    const QuadResult q = gauss_kronrod(g, 0.0, 1.0, 1e-15, 0.0, 200);
    return std::pow(d, p) / p * q.value;
  }

  double p_, h_;
  UniformHermite table_;
};

}  // namespace

DoubleWellPotential make_pendulum(const PExponent& P) {
  const double p = P.p();
  auto F = std::make_shared<const PendulumPrimitive>(p);
  const double w0 = 2.0 * (*F)(0.5);
  DoubleWellPotential::Spec s;
  s.name = "pendulum";
  s.p = p;
  // W is even; W = W_0 - F(|u|) on [0, 1/2] and F(1 - |u|) on [1/2, 1].
  s.w = [F, w0](double u) {
    const double a = std::abs(u);
    return a <= 0.5 ? w0 - (*F)(a) : (*F)(1.0 - a);
  };
  s.drop = [F, w0](double u) {
    const double a = std::abs(u);
    return a <= 0.5 ? (*F)(a) : w0 - (*F)(1.0 - a);
  };
  s.w_prime = [p](double u) { return -phi(sin_pi(u), p); };
  s.w_zero = w0;
  s.c_zero = s.c_one = s.c_minus1 = std::pow(std::numbers::pi, p - 1.0);
  return DoubleWellPotential(std::move(s));
}

DoubleWellPotential make_custom(const PExponent& P, std::string name, ScalarFn w, ScalarFn w_prime,
                                double c_minus1, double c_zero, double c_one, double w_zero) {
  DoubleWellPotential::Spec s;
  s.name = std::move(name);
  s.p = P.p();
  s.w = std::move(w);
  s.w_prime = std::move(w_prime);
  s.c_minus1 = c_minus1;
  s.c_zero = c_zero;
  s.c_one = c_one;
  s.w_zero = w_zero;
  return DoubleWellPotential(std::move(s));
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

[[noreturn]] void fail(const std::string& inv, double u, const std::string& what) {
  std::ostringstream os;
  os.precision(10);
  os << what << " at u = " << u;
  throw ValidationError(inv, os.str());
}

}  // namespace

PotentialReport validate_potential(const DoubleWellPotential& Wd, int grid_size, double ratio_tol) {
  if (grid_size < 100) throw DomainError("validate_potential: grid_size >= 100 required");
  const double p = Wd.p(), w0 = Wd.w_zero();
  PotentialReport rep;
  rep.grid_size = grid_size;

  // Grid on [-2, 2]: covers [-1, 1] and the extension on both sides.
  std::vector<double> grid(grid_size);
  for (int i = 0; i < grid_size; ++i) grid[i] = -2.0 + 4.0 * (i + 0.5) / grid_size;

  // (W2): W'(u)/phi_p(u) strictly decreasing for u < 0, increasing for u > 0.
  double prev_u = 0.0, prev_q = 0.0;
  bool have = false;
  for (double u : grid) {
    if (u >= 0.0) break;
    const double q = Wd.w_prime(u) / phi(u, p);
    // ties at rounding level are allowed where |u|^p underflows against 1
    if (have && !(q <= prev_q + 8.0 * kEps * std::abs(prev_q)))
      fail("(W2)", u, "W'/phi_p not strictly decreasing on [-1,0)");
    prev_u = u;
    prev_q = q;
    have = true;
  }
  have = false;
  for (double u : grid) {
    if (u <= 0.0) continue;
    const double q = Wd.w_prime(u) / phi(u, p);
    if (have && !(q >= prev_q - 8.0 * kEps * std::abs(prev_q)))
      fail("(W2)", prev_u, "W'/phi_p not strictly increasing on (0,1]");
    prev_u = u;
    prev_q = q;
    have = true;
  }
  rep.checks.push_back("(W2)");

  const double tol0 = 1e-12 * std::max(1.0, w0);
  for (double u : {-1.0, 1.0}) {
    if (std::abs(Wd.w(u)) > tol0) fail("W(+-1)=0", u, "well value nonzero");
    rep.max_abs_ends = std::max(rep.max_abs_ends, std::abs(Wd.w(u)));
  }
  for (double u : {-1.0, 0.0, 1.0}) {
    if (std::abs(Wd.w_prime(u)) > tol0) fail("W'(+-1)=W'(0)=0", u, "critical point missing");
    rep.max_abs_ends = std::max(rep.max_abs_ends, std::abs(Wd.w_prime(u)));
  }
  if (std::abs(Wd.w(0.0) - w0) > 1e-12 * w0) fail("W(0)=W_0", 0.0, "declared W_0 mismatch");
  rep.checks.push_back("W(+-1)=W'(+-1)=W'(0)=0");

  double wp_scale = 0.0;
  for (double u : grid) wp_scale = std::max(wp_scale, std::abs(Wd.w_prime(u)));
  for (double u : grid) {
    if (std::abs(u) < 1.0 && u != 0.0 && !(Wd.w_prime(u) * u < 0.0)) {
      fail("W'(u)u<0", u, "wrong sign of W'");
    }
    if (std::abs(u) < 1.0 - 1e-4) {
      const double h = 1e-5;
      const double fd = (Wd.w(u + h) - Wd.w(u - h)) / (2.0 * h);
      if (std::abs(fd - Wd.w_prime(u)) > 1e-5 * std::max(1.0, wp_scale)) {
        fail("W' consistent with W", u, "finite difference of W disagrees with W'");
      }
    }
  }
  rep.checks.push_back("W'(u)u<0");
  rep.checks.push_back("W' consistent with W");

  // Extension outside [-1, 1] is exact by construction; check it anyway.
  for (double d : {0.25, 0.5, 1.0}) {
    const double wp = Wd.c_one() / p * std::pow(d, p);
    const double wm = Wd.c_minus1() / p * std::pow(d, p);
    if (std::abs(Wd.w(1.0 + d) - wp) > 1e-14 * wp) fail("extension", 1.0 + d, "u >= 1 branch");
    if (std::abs(Wd.w(-1.0 - d) - wm) > 1e-14 * wm) fail("extension", -1.0 - d, "u <= -1 branch");
  }
  rep.checks.push_back("extension");

  // (W1) limit ratios
  const double d = 1e-3;
  rep.ratio_plus_one = Wd.w(1.0 - d) / (Wd.c_one() / p * std::pow(d, p));
  rep.ratio_minus_one = Wd.w(-1.0 + d) / (Wd.c_minus1() / p * std::pow(d, p));
  rep.ratio_zero = Wd.drop(d) / (Wd.c_zero() / p * std::pow(d, p));
  if (std::abs(rep.ratio_plus_one - 1.0) > ratio_tol) fail("(W1)", 1.0 - d, "C_1 expansion");
  if (std::abs(rep.ratio_minus_one - 1.0) > ratio_tol) fail("(W1)", -1.0 + d, "C_-1 expansion");
  if (std::abs(rep.ratio_zero - 1.0) > ratio_tol) fail("(W1)", d, "C_0 expansion");
  rep.checks.push_back("(W1)");
  return rep;
}

}  // namespace plap
