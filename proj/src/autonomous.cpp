#include "plap/autonomous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/ode.hpp"
#include "plap/parallel.hpp"
#include "plap/quadrature.hpp"
#include "plap/roots.hpp"

namespace plap {

double energy(const PhasePoint& z, double a, const DoubleWellPotential& Wd) {
  const PExponent& P = Wd.pexp();
  return -big_L(phi_p_inv(z.w, P), P) / a + Wd.w(z.v);
}

namespace {

struct SideIntegrals {
  double jt = 0.0;  // int_0^h ds / L_+^{-1}(a D)
  double jk = 0.0;  // int_0^h a D / L_+^{-1}(a D) ds
};

void check_energy(double xi, const DoubleWellPotential& Wd) {
  if (!(xi > 0.0 && xi < Wd.w_zero())) {
    std::ostringstream os;
    os << "energy " << xi << " outside (0, W_0 = " << Wd.w_zero() << ")";
    throw DomainError(os.str());
  }
}

// One side of the orbit. With s = h (1 - z^{p*}) the turning-point
// singularity (W(s) - xi)^{-1/p} cancels against ds/dz. Near the turning
// point W(s) - xi is obtained as an integral of -W' to avoid cancellation.
SideIntegrals side_integrals(double xi, double a, const DoubleWellPotential& Wd, int sign,
                             bool want_k) {
  const double p = Wd.p(), q = Wd.pexp().p_star();
  const double sg = sign > 0 ? 1.0 : -1.0;
  const double h = std::abs(Wd.h_branch(xi, sign));
  const double w0 = Wd.w_zero(), gap = w0 - xi;
  const double near = 0.25 * std::min(h, 1.0 - h);
  const double c = std::pow(q, -1.0 / p);
  auto D = [&](double z) {
    const double delta = h * std::pow(z, q);
    const double s = h - delta;
    if (delta < near) {
      // integrate -W' over [h - delta, h] using the exact width delta
      return delta * gauss_fixed([&](double t) { return -sg * Wd.w_prime(sg * (h - delta * t)); },
                                 0.0, 1.0, 10);
    }
    if (xi > 0.5 * w0) return gap - Wd.drop(sg * s);
    return Wd.w(sg * s) - xi;
  };
  auto jac = [&](double z) { return h * q * std::pow(z, q - 1.0); };
  // Positions near a well carry absolute rounding ~eps, i.e. relative noise
  // eps/(1-h) in W; do not ask the quadrature for more than that.
  const double rtol = std::max(1e-13, 64.0 * std::numeric_limits<double>::epsilon() / (1.0 - h));
  const double fail_tol = std::max(1e-9, 10.0 * rtol);

  SideIntegrals out;
  QuadResult rt = gauss_kronrod(
      [&](double z) {
        const double d = D(z);
        return d > 0.0 ? jac(z) * c * std::pow(a * d, -1.0 / p) : 0.0;
      },
      0.0, 1.0, rtol, 0.0, 4000);
  if (!rt.converged && rt.error > fail_tol * std::abs(rt.value)) {
    std::ostringstream os;
    os << "time_map: quadrature did not converge at xi = " << xi << " (estimate " << rt.error / rt.value << ")";
    throw NumericalError(os.str(), rt.error / rt.value);
  }
  out.jt = rt.value;
  if (want_k) {
    QuadResult rk = gauss_kronrod(
        [&](double z) {
          const double d = D(z);
          return d > 0.0 ? jac(z) * c * std::pow(a * d, 1.0 / q) : 0.0;
        },
        0.0, 1.0, rtol, 0.0, 4000);
    if (!rk.converged && rk.error > fail_tol * std::abs(rk.value)) {
      throw NumericalError("kinetic_avg: quadrature did not converge", rk.error / rk.value);
    }
    out.jk = rk.value;
  }
  return out;
}

}  // namespace

double half_time(double xi, double a, const DoubleWellPotential& Wd, int sign) {
  check_energy(xi, Wd);
  if (!(a > 0.0)) throw DomainError("time_map: a > 0 required");
  return 2.0 * side_integrals(xi, a, Wd, sign, false).jt;
}

double time_map(double xi, double a, const DoubleWellPotential& Wd) {
  return half_time(xi, a, Wd, +1) + half_time(xi, a, Wd, -1);
}

std::pair<double, double> time_and_kinetic(double xi, double a, const DoubleWellPotential& Wd) {
  check_energy(xi, Wd);
  if (!(a > 0.0)) throw DomainError("kinetic_avg: a > 0 required");
  const SideIntegrals up = side_integrals(xi, a, Wd, +1, true);
  const SideIntegrals dn = side_integrals(xi, a, Wd, -1, true);
  const double T = 2.0 * (up.jt + dn.jt);
  return {T, 2.0 * (up.jk + dn.jk) / T};
}

double kinetic_avg(double xi, double a, const DoubleWellPotential& Wd) {
  return time_and_kinetic(xi, a, Wd).second;
}

// ---------------------------------------------------------------------------

double TimeMapTable::sigma(double xi) const { return std::log(xi) - std::log(w0_ - xi); }

double TimeMapTable::xi_of_sigma(double s) const {
  return s >= 0.0 ? w0_ / (1.0 + std::exp(-s)) : w0_ * std::exp(s) / (1.0 + std::exp(s));
}

double TimeMapTable::sigma_of_u(double u) const { return smax_ * std::sinh(kStretch * u) / sinh_k_; }

double TimeMapTable::dxi_ds_over_k(double s) const {
  const double x = xi_of_sigma(s);
  return x * (w0_ - x) / w0_ / std::exp(logk_(s));
}

TimeMapTable::TimeMapTable(const DoubleWellPotential& Wd, double a, const TableGrid& grid)
    : a_(a), w0_(Wd.w_zero()), p_(Wd.p()) {
  if (grid.nodes < 8) throw DomainError("TimeMapTable: at least 8 nodes required");
  if (!(grid.delta > 0.0 && grid.delta < 0.25)) throw DomainError("TimeMapTable: bad delta");
  if (!(a > 0.0)) throw DomainError("TimeMapTable: a > 0 required");
  const int n = grid.nodes;
  smax_ = std::log((1.0 - grid.delta) / grid.delta);
  sinh_k_ = std::sinh(kStretch);
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
  sig_.resize(n);
  for (int i = 0; i < n; ++i) sig_[i] = sigma_of_u(u[i]);
  xi_.resize(n);
  t_.resize(n);
  k_.resize(n);
  for (int i = 0; i < n; ++i) {
    xi_[i] = xi_of_sigma(sig_[i]);
    sig_[i] = sigma(xi_[i]);  // abscissa of the rounded node itself
  }
  parallel_for(n, [&](long i) {
    auto [T, K] = time_and_kinetic(xi_[i], a, Wd);
    t_[i] = T;
    k_[i] = K;
  });
  for (int i = 0; i < n; ++i) {
    if (!(k_[i] > 0.0) || !std::isfinite(t_[i])) {
      throw ValidationError("K > 0", "nonpositive K at xi = " + std::to_string(xi_[i]));
    }
    // T flattens to machine precision near W_0; ties at rounding level are accepted
    if (i > 0 && !(t_[i] < t_[i - 1] * (1.0 + 1e-12))) {
      throw ValidationError("T decreasing", "T not decreasing at xi = " + std::to_string(xi_[i]));
    }
  }
  logt_ = CubicSpline(sig_, t_.array().log().matrix());
  logk_ = CubicSpline(sig_, k_.array().log().matrix());
  t_limit_ = 2.0 * Wd.pexp().pi_p() / std::pow(a * Wd.c_zero(), 1.0 / p_);

  const double L0 = -std::log(xi_[0]), L1 = -std::log(xi_[1]);
  beta_ = (1.0 / k_[1] - 1.0 / k_[0]) / (L1 - L0);
  alpha_ = 1.0 / k_[0] - beta_ * L0;
  c_top_ = k_[n - 1] / (w0_ - xi_[n - 1]);

  g_.resize(n);
  g_[0] = alpha_ * xi_[0] + beta_ * xi_[0] * (L0 + 1.0);
  for (int i = 0; i + 1 < n; ++i) {
    g_[i + 1] =
        g_[i] + gauss_fixed([&](double t) { return dxi_ds_over_k(t); }, sig_[i], sig_[i + 1], 8);
  }
}

double TimeMapTable::T(double xi) const {
  if (xi <= 0.0) return std::numeric_limits<double>::infinity();
  if (xi >= w0_) return t_limit_;
  const Eigen::Index n = sig_.size();
  if (xi < xi_[0]) {
    const double slope = (t_[1] - t_[0]) / (std::log(xi_[1]) - std::log(xi_[0]));
    return t_[0] + slope * (std::log(xi) - std::log(xi_[0]));
  }
  if (xi > xi_[n - 1]) {
    const double r = (w0_ - xi) / (w0_ - xi_[n - 1]);
    return t_limit_ + (t_[n - 1] - t_limit_) * r;
  }
  return std::exp(logt_(sigma(xi)));
}

double TimeMapTable::K(double xi) const {
  if (xi <= 0.0 || xi >= w0_) return 0.0;
  const Eigen::Index n = sig_.size();
  if (xi < xi_[0]) return 1.0 / (alpha_ - beta_ * std::log(xi));
  if (xi > xi_[n - 1]) return c_top_ * (w0_ - xi);
  return std::exp(logk_(sigma(xi)));
}

double TimeMapTable::G_sigma(double s) const {
  const double* b = sig_.data();
  Eigen::Index i = std::upper_bound(b, b + sig_.size(), s) - b - 1;
  i = std::clamp<Eigen::Index>(i, 0, sig_.size() - 2);
  return g_[i] + gauss_fixed([&](double t) { return dxi_ds_over_k(t); }, sig_[i], s, 8);
}

double TimeMapTable::G(double E) const {
  if (E < 0.0 || E >= w0_) {
    throw DomainError("G: energy " + std::to_string(E) + " outside [0, W_0)");
  }
  if (E == 0.0) return 0.0;
  const Eigen::Index n = sig_.size();
  if (E <= xi_[0]) return alpha_ * E + beta_ * E * (1.0 - std::log(E));
  if (E >= xi_[n - 1]) return g_[n - 1] + std::log((w0_ - xi_[n - 1]) / (w0_ - E)) / c_top_;
  return G_sigma(sigma(E));
}

double TimeMapTable::G_inv(double y) const {
  if (y < 0.0 || std::isnan(y)) throw DomainError("G_inv: negative argument");
  if (y == 0.0) return 0.0;
  const Eigen::Index n = sig_.size();
  if (y <= g_[0]) {
    return bracketed_root([&](double E) { return G(E) - y; }, 0.0, xi_[0]);
  }
  if (y >= g_[n - 1]) {
    const double E = w0_ - (w0_ - xi_[n - 1]) * std::exp(-c_top_ * (y - g_[n - 1]));
    return std::min(E, std::nextafter(w0_, 0.0));
  }
  const double* b = g_.data();
  Eigen::Index i = std::upper_bound(b, b + n, y) - b - 1;
  i = std::clamp<Eigen::Index>(i, 0, n - 2);
  const double s = bracketed_root([&](double t) { return G_sigma(t) - y; }, sig_[i], sig_[i + 1]);
  return xi_of_sigma(s);
}

// ---------------------------------------------------------------------------

Heteroclinic heteroclinic_orbit(double a, const DoubleWellPotential& Wd, double x_max, double dx) {
  if (!(x_max > 0.0) || !(dx > 0.0)) throw DomainError("heteroclinic_orbit: x_max, dx > 0");
  if (!(a > 0.0)) throw DomainError("heteroclinic_orbit: a > 0 required");
  const PExponent& P = Wd.pexp();
  const long m = std::lround(x_max / dx);
  const long n = 2 * m + 1;
  Heteroclinic h;
  h.a_ref = a;
  h.x_grid.resize(n);
  h.v_values.resize(n);
  h.vprime_values.resize(n);
  using V1 = Eigen::Matrix<double, 1, 1>;
  auto rhs = [&](double, const V1& y) {
    return V1(big_L_plus_inv(a * std::max(Wd.w(y[0]), 0.0), P));
  };
  OdeOptions opt;
  opt.rtol = 1e-13;
  opt.atol = 1e-16;
  DormandPrince<1> dp(opt);
  for (int dir : {+1, -1}) {
    double x = 0.0;
    V1 y(0.0);
    h.x_grid[m] = 0.0;
    h.v_values[m] = 0.0;
    for (long k = 1; k <= m; ++k) {
      const double xt = dir * (k * x_max / m);
      dp.integrate(rhs, x, y, xt);
      h.x_grid[m + dir * k] = xt;
      h.v_values[m + dir * k] = y[0];
    }
  }
  for (long i = 0; i < n; ++i) {
    h.vprime_values[i] = big_L_plus_inv(a * Wd.w(h.v_values[i]), P);
    const double e = std::abs(-big_L(h.vprime_values[i], P) / a + Wd.w(h.v_values[i]));
    h.max_energy_error = std::max(h.max_energy_error, e);
    if (i > 0 && !(h.v_values[i] > h.v_values[i - 1]) && std::abs(h.v_values[i]) < 1.0 - 1e-15) {
      throw NumericalError("heteroclinic_orbit: profile not increasing", h.v_values[i]);
    }
  }
  if (h.max_energy_error > 1e-8) {
    throw NumericalError("heteroclinic_orbit: energy drift", h.max_energy_error);
  }
  return h;
}

double heteroclinic_action(double a, const DoubleWellPotential& Wd) {
  const double p = Wd.p(), q = Wd.pexp().p_star();
  auto f = [&](double v) { return std::pow(q, -1.0 / p) * std::pow(a * Wd.w(v), 1.0 / q); };
  return integrate(f, -1.0, 0.0, 1e-13) + integrate(f, 0.0, 1.0, 1e-13);
}

// ---------------------------------------------------------------------------

double boundary_pair_threshold(double a, const DoubleWellPotential& Wd, int sign) {
  const double w0 = Wd.w_zero();
  double best = Wd.pexp().pi_p() / std::pow(a * Wd.c_zero(), 1.0 / Wd.p());  // xi -> W_0 limit
  for (int k = 0; k <= 64; ++k) {
    const double s = -20.0 + 40.0 * k / 64.0;
    const double xi = s >= 0.0 ? w0 / (1.0 + std::exp(-s)) : w0 * std::exp(s) / (1.0 + std::exp(s));
    best = std::min(best, half_time(xi, a, Wd, sign));
  }
  return 0.5 * best;
}

namespace {

// Energy of the one-signed arch whose half-time equals 2M.
double arch_energy(double M, double a, const DoubleWellPotential& Wd, int sign) {
  const double w0 = Wd.w_zero();
  auto xi_of = [w0](double s) {
    return s >= 0.0 ? w0 / (1.0 + std::exp(-s)) : w0 * std::exp(s) / (1.0 + std::exp(s));
  };
  auto f = [&](double s) { return half_time(xi_of(s), a, Wd, sign) - 2.0 * M; };
  double hi = 30.0, lo = -20.0;
  while (f(lo) < 0.0) {
    lo -= 40.0;
    if (lo < -650.0) throw NumericalError("boundary_pair: M too large to bracket", M);
  }
  if (f(hi) > 0.0) throw DomainError("boundary_pair: M below the minimal half-period");
  return xi_of(bracketed_root(f, lo, hi, 1e-14));
}

}  // namespace

BoundaryPair boundary_pair(double M, double a, const DoubleWellPotential& Wd, int samples) {
  if (!(a > 0.0)) throw DomainError("boundary_pair: a > 0 required");
  if (samples < 3 || samples % 2 == 0) throw DomainError("boundary_pair: odd samples >= 3");
  for (int sign : {+1, -1}) {
    const double M0 = boundary_pair_threshold(a, Wd, sign);
    if (!(M > M0)) {
      std::ostringstream os;
      os << "boundary_pair: no solution for M = " << M << " <= M_0 = " << M0;
      throw DomainError(os.str());
    }
  }
  const PExponent& P = Wd.pexp();
  BoundaryPair bp;
  bp.M = M;
  bp.x_grid = Eigen::VectorXd::LinSpaced(samples, -M, M);
  bp.v_plus.resize(samples);
  bp.v_minus.resize(samples);
  using V2 = Eigen::Vector2d;
  auto rhs = [&](double, const V2& y) { return V2(phi_p_inv(y[1], P), a * Wd.w_prime(y[0])); };
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;
  DormandPrince<2> dp(opt);
  const int mid = samples / 2;
  for (int sign : {+1, -1}) {
    const double xi = arch_energy(M, a, Wd, sign);
    const double h = Wd.h_branch(xi, sign);
    Eigen::VectorXd& v = sign > 0 ? bp.v_plus : bp.v_minus;
    (sign > 0 ? bp.xi_plus : bp.xi_minus) = xi;
    (sign > 0 ? bp.v_plus0 : bp.v_minus0) = h;
    V2 y(h, 0.0);
    double x = 0.0;
    v[mid] = h;
    for (int k = mid + 1; k < samples; ++k) {
      dp.integrate(rhs, x, y, bp.x_grid[k]);
      v[k] = y[0];
      v[samples - 1 - k] = y[0];
    }
  }
  return bp;
}

}  // namespace plap
