#include "plap/ptrig.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <string>

#include "plap/errors.hpp"
#include "plap/ode.hpp"
#include "plap/quadrature.hpp"

namespace plap {

PExponent::PExponent(double p) : p_(p) {
  if (!(p > 1.0)) throw DomainError("p > 1 required, got " + std::to_string(p));
  if (p < kMinP || p > kMaxP) {
    throw DomainError("p must lie in [1.1, 10], got " + std::to_string(p));
  }
  p_star_ = p / (p - 1.0);
  pi_p_ = compute_pi_p(p);
  gamma_p_ = p < 2.0 ? 1.0 / (p - 1.0) : 1.0;
}

double big_L_plus_inv(double y, const PExponent& P) {
  if (y < 0.0) throw DomainError("big_L_plus_inv: negative argument");
  return std::pow(P.p_star() * y, 1.0 / P.p());
}

double compute_pi_p(double p) {
  if (!(p > 1.0)) throw DomainError("compute_pi_p: p > 1 required");
  const double q = p / (p - 1.0);
  // [0, s0] is regular; on [s0, 1] put 1 - s^p = z^q.
  const double s0 = std::pow(0.5, 1.0 / p);
  const double z1 = std::pow(0.5, 1.0 / q);
  QuadResult a = gauss_kronrod([&](double s) { return std::pow(1.0 - std::pow(s, p), -1.0 / p); },
                               0.0, s0, 1e-14);
  QuadResult b = gauss_kronrod(
      [&](double z) { return (q / p) * std::pow(1.0 - std::pow(z, q), 1.0 / p - 1.0); }, 0.0, z1,
      1e-14);
  const double val = a.value + b.value;
  const double err = a.error + b.error;
  if (!a.converged || !b.converged || err > 1e-12 * val) {
    throw NumericalError("compute_pi_p: quadrature did not converge", err / val);
  }
  return 2.0 * std::pow(p - 1.0, 1.0 / p) * val;
}

namespace {

using V2 = Eigen::Vector2d;

struct TrigRhs {
  double p, q;
  V2 operator()(double, const V2& y) const { return V2(-phi(y[1], q), phi(y[0], p)); }
};

}  // namespace

void PTrig::project(double& c, double& s) const {
  const double F = std::pow(std::abs(c), p_) + (p_ / q_) * std::pow(std::abs(s), q_);
  c *= std::pow(F, -1.0 / p_);
  s *= std::pow(F, -1.0 / q_);
}

PTrig::PTrig(double p, int nodes) : p_(p), q_(p / (p - 1.0)), pi_p_(compute_pi_p(p)) {
  if (nodes < 5 || nodes % 2 == 0) throw DomainError("PTrig: node count must be odd and >= 5");
  const int n = nodes - 1;
  dt_ = 0.5 * pi_p_ / n;
  c_.assign(nodes, 0.0);
  s_.assign(nodes, 0.0);
  OdeOptions opt;
  opt.rtol = 1e-14;
  opt.atol = 1e-15;
  DormandPrince<2> dp(opt);
  TrigRhs f{p_, q_};
  auto proj = [&](double, V2& y, const StepInfo&) {
    project(y[0], y[1]);
    return true;
  };
  const int mid = n / 2;
  V2 y(1.0, 0.0);
  double x = 0.0;
  c_[0] = 1.0;
  for (int i = 1; i <= mid; ++i) {
    dp.integrate(f, x, y, i * dt_, proj);
    c_[i] = y[0];
    s_[i] = y[1];
  }
  const V2 fwd = y;
  // S(pi_p/2) follows from the identity with C = 0.
  y = V2(0.0, std::pow(q_ / p_, 1.0 / q_));
  x = 0.5 * pi_p_;
  c_[n] = 0.0;
  s_[n] = y[1];
  for (int i = n - 1; i >= mid; --i) {
    dp.integrate(f, x, y, i * dt_, proj);
    c_[i] = y[0];
    s_[i] = y[1];
  }
  seam_ = (fwd - y).cwiseAbs().maxCoeff();
  if (seam_ > 1e-10) {
    throw NumericalError("PTrig: forward/backward sweeps disagree at pi_p/4", seam_);
  }
}

std::pair<double, double> PTrig::quarter(double t) const {
  const int n = static_cast<int>(c_.size()) - 1;
  int i = static_cast<int>(std::lround(t / dt_));
  i = std::clamp(i, 0, n);
  const double t0 = i * dt_;
  if (t == t0) return {c_[i], s_[i]};
  OdeOptions opt;
  opt.rtol = 1e-14;
  opt.atol = 1e-15;
  DormandPrince<2> dp(opt);
  V2 y(c_[i], s_[i]);
  double x = t0;
  dp.integrate(TrigRhs{p_, q_}, x, y, t);
  double c = y[0], s = y[1];
  project(c, s);
  return {c, s};
}

std::pair<double, double> PTrig::cs(double theta) const {
  const double period = 2.0 * pi_p_;
  double t = std::fmod(theta, period);
  if (t < 0.0) t += period;
  const double h = 0.5 * pi_p_;
  if (t <= h) return quarter(t);
  if (t <= pi_p_) {
    auto [c, s] = quarter(pi_p_ - t);
    return {-c, s};
  }
  if (t <= 3.0 * h) {
    auto [c, s] = quarter(t - pi_p_);
    return {-c, -s};
  }
  auto [c, s] = quarter(period - t);
  return {c, -s};
}

double PTrig::angle(double c, double s) const {
  if (c == 0.0 && s == 0.0) throw DomainError("PTrig::angle: zero vector");
  project(c, s);
  const double ac = std::abs(c), as = std::abs(s);
  double t0;  // first-quadrant angle of (|c|, |s|)
  if (std::pow(ac, p_) <= 0.5) {
    const double I = integrate([&](double x) { return std::pow(1.0 - std::pow(x, p_), -1.0 / p_); },
                               0.0, ac, 1e-13, 1e-300);
    t0 = 0.5 * pi_p_ - std::pow(p_ - 1.0, 1.0 / p_) * I;
  } else {
    t0 = integrate(
        [&](double x) { return std::pow(1.0 - (p_ - 1.0) * std::pow(x, q_), -1.0 / q_); }, 0.0,
        as, 1e-13, 1e-300);
  }
  t0 = std::clamp(t0, 0.0, 0.5 * pi_p_);
  if (c >= 0.0 && s >= 0.0) return t0;
  if (c < 0.0 && s >= 0.0) return pi_p_ - t0;
  if (c < 0.0) return pi_p_ + t0;
  const double t = 2.0 * pi_p_ - t0;
  return t >= 2.0 * pi_p_ ? 0.0 : t;
}

std::shared_ptr<const PTrig> PTrig::get(double p) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const PTrig>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
  }
  auto t = std::make_shared<const PTrig>(p);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(p, std::move(t)).first->second;
}

double p_cosine(double theta, const PExponent& P) { return PTrig::get(P.p())->cos(theta); }
double p_sine(double theta, const PExponent& P) { return PTrig::get(P.p())->sin(theta); }

}  // namespace plap
