#include "plap/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/fd.hpp"

namespace plap {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double sup(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Junction windows of the blocks when the solution records them, else the
// support components themselves.
std::vector<std::pair<double, double>> block_ranges(const BVPSolution& sol,
                                                    const SupportSpec& A) {
  const auto& w = sol.tau_star.windows;
  if (w.size() == A.intervals.size() && !w.empty()) return w;
  std::vector<std::pair<double, double>> r;
  for (const auto& c : A.intervals) r.emplace_back(c.s, c.t);
  return r;
}

}  // namespace

namespace {

// Trace over consecutive segments of one grid. Each segment is differenced on
// its own; a node shared by two segments gets the mean energy and the larger
// of the two one-sided residuals.
struct Segment {
  Eigen::VectorXd x, u, w;
};

EnergyTrace trace_segments(const std::vector<Segment>& segs, const WeightFunction& a,
                           const DoubleWellPotential& Wd) {
  const double ps = Wd.pexp().p_star();
  std::vector<double> X, E, R;
  for (size_t j = 0; j < segs.size(); ++j) {
    const auto& sg = segs[j];
    const Eigen::Index n = sg.x.size();
    Eigen::VectorXd kin(n), e(n), r = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      kin[i] = std::pow(std::abs(sg.w[i]), ps) / ps;  // L(eps u')
      e[i] = -kin[i] / a(sg.x[i]) + Wd.w(sg.u[i]);
    }
    if (n >= 3) {
      for (Eigen::Index i = 0; i < n; ++i) {
        // centred where possible, one-sided three-point at the segment ends
        const Eigen::Index lo = std::clamp<Eigen::Index>(i - 1, 0, n - 3);
        const Eigen::VectorXd c = fornberg_weights(sg.x[i], sg.x.segment(lo, 3), 1);
        const double ai = a(sg.x[i]);
        r[i] = std::abs(c.dot(e.segment(lo, 3)) - a.a_prime(sg.x[i]) / (ai * ai) * kin[i]);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (j > 0 && i == 0) {
        E.back() = 0.5 * (E.back() + e[0]);
        R.back() = std::max(R.back(), r[0]);
        continue;
      }
      X.push_back(sg.x[i]);
      E.push_back(e[i]);
      R.push_back(r[i]);
    }
  }
  auto vec = [](std::vector<double>& v) {
    return Eigen::VectorXd(
        Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  EnergyTrace tr;
  tr.x_grid = vec(X);
  tr.e_values = vec(E);
  tr.residuals = vec(R);
  if (!R.empty()) tr.max_residual = *std::max_element(R.begin(), R.end());
  return tr;
}

}  // namespace

EnergyTrace energy_trace(double eps, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w, const WeightFunction& a,
                         const DoubleWellPotential& Wd) {
  const Eigen::Index n = x.size();
  if (u.size() != n || w.size() != n) throw DomainError("energy_trace: size mismatch");
  if (!(eps > 0.0)) throw DomainError("energy_trace: eps > 0 required");
  const double p = Wd.p();
  // split at interior nodes where u vanishes exactly (junctions); there each
  // side gets the momentum recovered from its own adjacent cell
  std::vector<Segment> segs;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= n - 1; ++i) {
    if (i < n - 1 && u[i] != 0.0) continue;
    const Eigen::Index len = i - start + 1;
    Segment sg{x.segment(start, len), u.segment(start, len), w.segment(start, len)};
    if (len >= 2) {
      auto src = [&](Eigen::Index k) { return 0.5 / eps * a(sg.x[k]) * Wd.w_prime(sg.u[k]); };
      if (start > 0) {
        const double h = sg.x[1] - sg.x[0];
        sg.w[0] = phi(eps * (sg.u[1] - sg.u[0]) / h, p) - h * src(0);
      }
      if (i < n - 1) {
        const Eigen::Index m = len - 1;
        const double h = sg.x[m] - sg.x[m - 1];
        sg.w[m] = phi(eps * (sg.u[m] - sg.u[m - 1]) / h, p) + h * src(m);
      }
    }
    segs.push_back(std::move(sg));
    start = i;
  }
  if (n == 1) segs.push_back({x, u, w});
  return trace_segments(segs, a, Wd);
}

EnergyTrace energy_trace(const BVPSolution& sol, const WeightFunction& a,
                         const DoubleWellPotential& Wd) {
  return energy_trace(sol.eps, sol.x_grid, sol.u_values, sol.w_values, a, Wd);
}

LandauReport landau_check(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& vprime, const PExponent& P, double end_tol) {
  const Eigen::Index n = x.size();
  if (n < 5 || v.size() != n || vprime.size() != n) {
    throw DomainError("landau_check: need >= 5 matching samples");
  }
  const double scale = std::max(1.0, sup(vprime));
  if (std::abs(vprime[0]) > end_tol * scale || std::abs(vprime[n - 1]) > end_tol * scale) {
    throw ValidationError("v'(0) = v'(1) = 0", "v'(0) = " + fmt(vprime[0]) +
                                                   ", v'(1) = " + fmt(vprime[n - 1]));
  }
  const Eigen::VectorXd psi = vprime.unaryExpr([&](double s) { return phi_p(s, P); });
  const Eigen::VectorXd dpsi = fd_derivative(x, psi, 5);
  const double npsi = sup(psi), nv = sup(v), nd = sup(dpsi);
  LandauReport r;
  r.lhs = std::pow(npsi, P.p_star());
  r.rhs = 4.0 * P.gamma_p() * nv * nd;
  r.margin = r.rhs - r.lhs;
  r.coarse_lhs = npsi;
  r.coarse_rhs = std::pow(2.0, P.p() - 1.0) * std::pow(nv, P.p() - 1.0) + nd;
  r.coarse_margin = r.coarse_rhs - r.coarse_lhs;
  return r;
}

LandauReport landau_check(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const PExponent& P,
                          double end_tol) {
  if (x.size() < 5 || v.size() != x.size()) {
    throw DomainError("landau_check: need >= 5 matching samples");
  }
  return landau_check(x, v, fd_derivative(x, v, 5), P, end_tol);
}

Eigen::VectorXd solution_zeros(const BVPSolution& sol) {
  if (sol.zero_locations.size() > 0) return sol.zero_locations;
  std::vector<double> z;
  const auto& x = sol.x_grid;
  const auto& u = sol.u_values;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    if (u[i] == 0.0 && i > 0 && u[i - 1] * u[i + 1] < 0.0) {
      z.push_back(x[i]);
    } else if (u[i] * u[i + 1] < 0.0) {
      z.push_back(x[i] + (x[i + 1] - x[i]) * u[i] / (u[i] - u[i + 1]));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
}

bool ZeroCountReport::decreasing_last(int k) const {
  const int n = static_cast<int>(levels.size());
  if (k < 2 || n < k) return false;
  for (int i = n - k + 1; i < n; ++i) {
    if (!(levels[i].rel_error < levels[i - 1].rel_error)) return false;
  }
  return true;
}

ZeroCountReport zero_count_report(const std::vector<BVPSolution>& sweep, const EnergyProfile& E,
                                  const WeightFunction& a, const TimeMapTable& table) {
  ZeroCountReport rep;
  const SupportSpec& A = E.support;
  for (const auto& c : A.intervals) {
    rep.block_integrals.push_back(zero_count_integral(A, a, table, c.s, c.t));
  }
  for (double v : rep.block_integrals) rep.integral += v;
  auto rel = [](double approx, double exact) {
    return exact > 0.0 ? std::abs(approx - exact) / exact : std::abs(approx);
  };
  for (const auto& sol : sweep) {
    const Eigen::VectorXd z = solution_zeros(sol);
    ZeroCountLevel lv;
    lv.eps = sol.eps;
    lv.zeros = static_cast<int>(z.size());
    lv.eps_z = sol.eps * lv.zeros;
    lv.rel_error = rel(lv.eps_z, rep.integral);
    const auto ranges = block_ranges(sol, A);
    for (size_t b = 0; b < ranges.size(); ++b) {
      int cnt = 0;
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        if (z[j] >= ranges[b].first && z[j] <= ranges[b].second) ++cnt;
      }
      lv.block_zeros.push_back(cnt);
      lv.block_rel_error.push_back(rel(sol.eps * cnt, rep.block_integrals[b]));
    }
    rep.levels.push_back(std::move(lv));
  }
  return rep;
}

bool AccumulationReport::support_distance_shrinks() const {
  for (size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i].support_to_zeros < levels[i - 1].support_to_zeros)) return false;
  }
  return levels.size() >= 2;
}

bool AccumulationReport::zero_distance_shrinks() const {
  for (size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i].zeros_to_set <= levels[i - 1].zeros_to_set)) return false;
  }
  return levels.size() >= 2;
}

AccumulationReport accumulation_report(const std::vector<BVPSolution>& sweep,
                                       const EnergyProfile& E, const WeightFunction& a,
                                       const TimeMapTable& table, int samples) {
  AccumulationReport rep;
  const int grid = 20000;
  double prev = a.a_prime(0.0);
  for (int i = 1; i <= grid; ++i) {
    const double x = static_cast<double>(i) / grid;
    const double cur = a.a_prime(x);
    if (cur == 0.0) {
      rep.critical_points.push_back(x);
    } else if (prev != 0.0 && (prev < 0.0) != (cur < 0.0)) {
      const double x0 = x - 1.0 / grid;
      rep.critical_points.push_back(x0 + (x - x0) * prev / (prev - cur));
    }
    prev = cur;
  }
  const SupportSpec& A = E.support;
  const double p = table.p();
  for (const auto& sol : sweep) {
    const Eigen::VectorXd z = solution_zeros(sol);
    AccumulationLevel lv;
    lv.eps = sol.eps;
    auto nearest_zero = [&](double x) {
      double d = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < z.size(); ++j) d = std::min(d, std::abs(z[j] - x));
      return d;
    };
    for (const auto& c : A.intervals) {
      for (int k = 0; k <= samples; ++k) {
        const double x = c.s + (c.t - c.s) * k / samples;
        lv.support_to_zeros = std::max(lv.support_to_zeros, nearest_zero(x));
      }
    }
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      double d = std::min(z[j], 1.0 - z[j]);
      for (const auto& c : A.intervals) {
        if (z[j] >= c.s && z[j] <= c.t) d = 0.0;
        d = std::min({d, std::abs(z[j] - c.s), std::abs(z[j] - c.t)});
      }
      for (double cp : rep.critical_points) d = std::min(d, std::abs(z[j] - cp));
      lv.zeros_to_set = std::max(lv.zeros_to_set, d);
    }
    // gaps between consecutive zeros inside one component, against the
    // local half period eps T_a(E)/2 at the midpoint
    lv.spacing_min = std::numeric_limits<double>::infinity();
    lv.spacing_max = 0.0;
    for (Eigen::Index j = 0; j + 1 < z.size(); ++j) {
      for (const auto& c : A.intervals) {
        if (!(z[j] > c.s && z[j + 1] < c.t)) continue;
        const double m = 0.5 * (z[j] + z[j + 1]);
        const double e = E(m);
        if (!(e > 0.0)) continue;
        const double half = 0.5 * sol.eps * unit_t(e, table) / std::pow(a(m), 1.0 / p);
        const double ratio = (z[j + 1] - z[j]) / half;
        lv.spacing_min = std::min(lv.spacing_min, ratio);
        lv.spacing_max = std::max(lv.spacing_max, ratio);
      }
    }
    if (lv.spacing_max == 0.0) lv.spacing_min = 0.0;
    rep.levels.push_back(lv);
  }
  return rep;
}

LayerDecayFit layer_decay_check(double eps, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& uprime,
                                const std::vector<DecayInterval>& intervals, double quantile,
                                double floor) {
  if (!(eps > 0.0)) throw DomainError("layer_decay_check: eps > 0 required");
  std::vector<double> ds, ys;
  LayerDecayFit fit;
  for (const auto& iv : intervals) {
    const double mid = 0.5 * (iv.s + iv.t);
    double umid = 0.0, best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - mid) < best) {
        best = std::abs(x[i] - mid);
        umid = u[i];
      }
    }
    const double sigma = umid < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < iv.s || x[i] > iv.t) continue;
      const double v = sigma * u[i];
      if (v < -1e-12 || v > 1.0 + 1e-12) {
        throw ValidationError("solution stays in [0, 1] on the interval",
                              "u = " + fmt(u[i]) + " at x = " + fmt(x[i]));
      }
      const double d = std::min(x[i] - iv.s, iv.t - x[i]) / eps;
      if (std::abs(x[i] - mid) <= (iv.t - iv.s) / 6.0) {
        fit.plateau_gap = std::max(fit.plateau_gap, std::abs(v - 1.0));
      }
      const double val = std::abs(v - 1.0) + std::abs(eps * uprime[i]);
      if (val <= floor) continue;  // rounding floor, outside the exponential regime
      ds.push_back(d);
      ys.push_back(std::log(val));
    }
  }
  const size_t n = ds.size();
  fit.samples = static_cast<int>(n);
  if (n < 3) throw NumericalError("layer_decay_check: fewer than 3 samples above the floor");
  Eigen::MatrixXd M(n, 2);
  Eigen::VectorXd y(n);
  for (size_t i = 0; i < n; ++i) {
    M(i, 0) = 1.0;
    M(i, 1) = ds[i];
    y[i] = ys[i];
  }
  const Eigen::Vector2d c = M.colPivHouseholderQr().solve(y);
  fit.K2 = -c[1];
  std::vector<double> shifted(n);
  for (size_t i = 0; i < n; ++i) shifted[i] = ys[i] + fit.K2 * ds[i];
  std::sort(shifted.begin(), shifted.end());
  const size_t k = std::min(n - 1, static_cast<size_t>(std::ceil(quantile * n)) - 1);
  fit.K1 = std::exp(shifted[k]);
  size_t under = 0;
  for (size_t i = 0; i < n; ++i) under += ys[i] <= std::log(fit.K1) - fit.K2 * ds[i] + 1e-12;
  fit.coverage = static_cast<double>(under) / n;
  return fit;
}

LayerDecayFit layer_decay_check(const BVPSolution& sol, const std::vector<DecayInterval>& intervals,
                                double quantile, double floor) {
  return layer_decay_check(sol.eps, sol.x_grid, sol.u_values, sol.uprime_values, intervals,
                           quantile, floor);
}

}  // namespace plap
