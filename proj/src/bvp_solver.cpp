#include "plap/bvp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/parallel.hpp"
#include "plap/ptrig.hpp"
#include "plap/quadrature.hpp"

namespace plap {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double w_second(const DoubleWellPotential& Wd, double u) {
  const double d = 1e-6 * std::max(1.0, std::abs(u));
  return (Wd.w_prime(u + d) - Wd.w_prime(u - d)) / (2.0 * d);
}

// LDL^T of a symmetric tridiagonal matrix; solves in place. False if a pivot
// is not positive.
bool solve_spd_tridiag(const std::vector<double>& diag, const std::vector<double>& off,
                       std::vector<double>& rhs) {
  const size_t n = diag.size();
  if (n == 0) return true;
  std::vector<double> d(n), l(n, 0.0);
  d[0] = diag[0];
  if (!(d[0] > 0.0)) return false;
  for (size_t i = 1; i < n; ++i) {
    l[i] = off[i - 1] / d[i - 1];
    d[i] = diag[i] - l[i] * off[i - 1];
    if (!(d[i] > 0.0)) return false;
  }
  for (size_t i = 1; i < n; ++i) rhs[i] -= l[i] * rhs[i - 1];
  for (size_t i = 0; i < n; ++i) rhs[i] /= d[i];
  for (size_t i = n - 1; i-- > 0;) rhs[i] -= l[i + 1] * rhs[i + 1];
  return true;
}

// Discrete functional in the variable v = sign * u >= 0.
struct PieceProblem {
  double eps, s, t, h, ep;  // ep = eps^p
  int sign, N;
  BoundaryKind kind;
  const DoubleWellPotential* Wd;
  double p;
  Eigen::VectorXd x, xi, mu, av, apv;
  int first_free, last_free;

  PieceProblem(double eps_, double s_, double t_, int sign_, BoundaryKind kind_,
               const WeightFunction& a, const DoubleWellPotential& W, int cells)
      : eps(eps_), s(s_), t(t_), sign(sign_), N(cells), kind(kind_), Wd(&W), p(W.p()) {
    h = (t - s) / N;
    ep = std::pow(eps, p);
    x.resize(N + 1);
    xi.resize(N + 1);
    mu.resize(N + 1);
    av.resize(N + 1);
    apv.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
      xi[i] = static_cast<double>(i) / N;
      x[i] = i == N ? t : s + (t - s) * xi[i];
      mu[i] = (i == 0 || i == N) ? 0.5 * h : h;
      av[i] = a(x[i]);
      apv[i] = a.a_prime(x[i]);
    }
    first_free = kind == BoundaryKind::kNeumannDirichlet ? 0 : 1;
    last_free = kind == BoundaryKind::kDirichletNeumann ? N : N - 1;
  }

  double energy(const Eigen::VectorXd& v) const {
    double e = 0.0;
    for (int k = 0; k < N; ++k) e += h * ep / p * std::pow(std::abs((v[k + 1] - v[k]) / h), p);
    for (int i = 0; i <= N; ++i) e += mu[i] * av[i] * Wd->w(sign * v[i]);
    return e;
  }

  void gradient(const Eigen::VectorXd& v, Eigen::VectorXd& g) const {
    g.setZero(N + 1);
    for (int k = 0; k < N; ++k) {
      const double f = ep * phi((v[k + 1] - v[k]) / h, p);
      g[k] -= f;
      g[k + 1] += f;
    }
    for (int i = 0; i <= N; ++i) g[i] += mu[i] * av[i] * sign * Wd->w_prime(sign * v[i]);
  }

  // residual of the Euler-Lagrange equations at free nodes (projected on the
  // active set v_i = 0)
  double residual(const Eigen::VectorXd& v, const Eigen::VectorXd& g) const {
    double r = 0.0;
    for (int i = first_free; i <= last_free; ++i) {
      if (v[i] <= 0.0 && g[i] > 0.0) continue;
      r = std::max(r, std::abs(g[i]) / mu[i]);
    }
    return r;
  }
};

}  // namespace

PieceMinimizer minimize_piece(double eps, double s, double t, int sign, BoundaryKind kind,
                              const WeightFunction& a, const DoubleWellPotential& Wd, int cells,
                              const Eigen::VectorXd* warm, const PieceOptions& opt) {
  if (!(eps > 0.0)) throw DomainError("minimize_piece: eps > 0 required");
  if (!(s >= 0.0 && t <= 1.0 && s < t)) {
    throw DomainError("minimize_piece: 0 <= s < t <= 1 required, got (" + fmt(s) + ", " +
                      fmt(t) + ")");
  }
  if (sign != 1 && sign != -1) throw DomainError("minimize_piece: sign must be +1 or -1");
  if (cells < 2) throw DomainError("minimize_piece: at least 2 cells required");

  PieceProblem P(eps, s, t, sign, kind, a, Wd, cells);
  const int N = cells;
  const double p = P.p, ps = p / (p - 1.0), W0 = Wd.w_zero();

  PieceMinimizer out;
  out.eps = eps;
  out.s = s;
  out.t = t;
  out.sign = sign;
  out.kind = kind;
  out.x_grid = P.x;
  out.zero_level = W0 * P.mu.dot(P.av);

  auto make_trivial = [&](int iters) {
    out.trivial = true;
    out.u_values = Eigen::VectorXd::Zero(N + 1);
    out.w_values = Eigen::VectorXd::Zero(N + 1);
    out.m_value = out.zero_level;
    out.d_left = out.d_right = 0.0;
    out.dm_ds = -a(s) * W0;
    out.dm_dt = a(t) * W0;
    out.residual = 0.0;
    out.iterations = iters;
    return out;
  };

  if (opt.eigen_test) {
    int zeros = 0;
    switch (kind) {
      case BoundaryKind::kDirichletDirichlet:
        zeros = count_eigenvalues(eps, s, t, a, Wd);
        break;
      case BoundaryKind::kNeumannDirichlet:
        zeros = linearized_zero_count(eps, s, 1.0, 0.0, t, a, Wd);
        break;
      case BoundaryKind::kDirichletNeumann:
        zeros = linearized_zero_count(eps, t, 1.0, 0.0, s, a, Wd);
        break;
    }
    if (zeros == 0) return make_trivial(0);
  }

  Eigen::VectorXd v(N + 1);
  bool warm_ok = warm && warm->size() == N + 1 && (sign * *warm).maxCoeff() > 1e-3;
  if (warm_ok) {
    v = (sign * *warm).cwiseMax(0.0);
  } else {
    for (int i = 0; i <= N; ++i) {
      double f = 1.0;
      if (kind != BoundaryKind::kNeumannDirichlet) f *= std::tanh((P.x[i] - s) / eps);
      if (kind != BoundaryKind::kDirichletNeumann) f *= std::tanh((t - P.x[i]) / eps);
      v[i] = f;
    }
  }
  if (kind != BoundaryKind::kNeumannDirichlet) v[0] = 0.0;
  if (kind != BoundaryKind::kDirichletNeumann) v[N] = 0.0;

  const double eta = 1e-8 / eps;  // floor on |D| in the curvature of |D|^p
  const int nf = P.last_free - P.first_free + 1;
  std::vector<double> diag(nf), off(std::max(nf - 1, 0)), rhs(nf);
  Eigen::VectorXd g(N + 1), vn(N + 1), gn(N + 1);
  double F = P.energy(v);
  P.gradient(v, g);
  double r = P.residual(v, g);
  double lambda = 0.0;
  int it = 0;
  // rounding floor of the residual for this grid
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                       (P.ep * std::pow(1.0 / eps, p - 1.0) / P.h + P.av.maxCoeff() * W0);
  const double target = std::max(opt.tol, floor);
  for (; it < opt.max_iter && r > target; ++it) {
    // tridiagonal Hessian on the free, inactive nodes
    std::vector<double> c(N);
    for (int k = 0; k < N; ++k) {
      const double D = std::abs((v[k + 1] - v[k]) / P.h);
      c[k] = P.ep * (p - 1.0) * std::pow(std::max(D, eta), p - 2.0) / P.h;
    }
    std::vector<char> active(N + 1, 0);
    for (int i = P.first_free; i <= P.last_free; ++i) active[i] = v[i] <= 0.0 && g[i] > 0.0;
    double dmax = 0.0;
    for (int j = 0; j < nf; ++j) {
      const int i = P.first_free + j;
      double d = P.mu[i] * P.av[i] * w_second(Wd, sign * v[i]);
      if (i > 0) d += c[i - 1];
      if (i < N) d += c[i];
      diag[j] = d;
      dmax = std::max(dmax, std::abs(d));
      if (j + 1 < nf) off[j] = -c[i];
    }
    for (int j = 0; j < nf; ++j) {
      const int i = P.first_free + j;
      if (active[i]) {
        diag[j] = 1.0;
        if (j > 0) off[j - 1] = 0.0;
        if (j + 1 < nf) off[j] = 0.0;
      }
    }
    // Levenberg shift until the factorization is positive definite
    std::vector<double> dl(nf);
    lambda = lambda > 0.0 ? 0.1 * lambda : 0.0;
    for (int tries = 0;; ++tries) {
      for (int j = 0; j < nf; ++j) {
        const int i = P.first_free + j;
        rhs[j] = active[i] ? 0.0 : -g[i];
        dl[j] = diag[j] + (active[i] ? 0.0 : lambda);
      }
      if (solve_spd_tridiag(dl, off, rhs)) break;
      lambda = std::max(4.0 * lambda, 1e-10 * std::max(dmax, 1e-300));
      if (tries > 200) {
        throw OptimizationError("minimize_piece: Hessian shift failed", r);
      }
    }
    // projected backtracking: accept on Armijo decrease or on a residual drop
    double alpha = 1.0, Fn = F, rn = r;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      vn = v;
      for (int j = 0; j < nf; ++j) {
        const int i = P.first_free + j;
        vn[i] = std::max(0.0, v[i] + alpha * rhs[j]);
      }
      Fn = P.energy(vn);
      const double pred = g.dot(vn - v);
      P.gradient(vn, gn);
      rn = P.residual(vn, gn);
      if (Fn <= F + 1e-4 * pred || (rn < 0.5 * r && Fn <= F + 1e-12 * std::abs(F))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    v.swap(vn);
    g.swap(gn);
    F = Fn;
    r = rn;
  }
  if (r > target * 100.0) {
    throw OptimizationError(
        "minimize_piece: no convergence on (" + fmt(s) + ", " + fmt(t) + "), residual " + fmt(r),
        r);
  }
  if (v.maxCoeff() < 1e-12) return make_trivial(it);

  // scalar Newton on a Neumann node: the recovered end derivative is
  // phi_{p*} of the node residual, which amplifies it for p > 2
  auto polish = [&](int i, int j) {
    const double dir = i < j ? -1.0 : 1.0;
    auto gi = [&](double vi) {
      const double D = dir * (vi - v[j]) / P.h;
      return dir * P.ep * phi(D, p) + P.mu[i] * P.av[i] * sign * Wd.w_prime(sign * vi);
    };
    double best = v[i], gbest = std::abs(gi(v[i]));
    double vi = v[i];
    for (int k = 0; k < 50 && gbest > 0.0; ++k) {
      const double D = std::abs((vi - v[j]) / P.h);
      const double c = P.ep * (p - 1.0) * std::pow(std::max(D, eta), p - 2.0) / P.h;
      const double dg = c + P.mu[i] * P.av[i] * w_second(Wd, sign * vi);
      if (!(dg > 0.0)) break;
      vi = std::max(0.0, vi - gi(vi) / dg);
      const double gn = std::abs(gi(vi));
      if (gn < gbest) {
        best = vi;
        gbest = gn;
      } else if (k > 2) {
        break;
      }
    }
    v[i] = best;
  };
  if (kind == BoundaryKind::kNeumannDirichlet) polish(0, 1);
  if (kind == BoundaryKind::kDirichletNeumann) polish(N, N - 1);
  if (kind != BoundaryKind::kDirichletDirichlet) {
    F = P.energy(v);
    P.gradient(v, g);
    r = P.residual(v, g);
  }

  out.trivial = false;
  out.iterations = it;
  out.residual = r;
  out.u_values = sign * v;
  out.m_value = F;

  // exact derivatives of the discrete m under the affine map x = s + (t - s) xi
  const double L = t - s;
  double kin = 0.0, pot = 0.0, at = 0.0, as = 0.0;
  for (int k = 0; k < N; ++k) kin += P.h * P.ep / ps * std::pow(std::abs((v[k + 1] - v[k]) / P.h), p);
  for (int i = 0; i <= N; ++i) {
    const double Wi = Wd.w(sign * v[i]);
    pot += P.mu[i] * P.av[i] * Wi;
    at += P.mu[i] * P.apv[i] * P.xi[i] * Wi;
    as += P.mu[i] * P.apv[i] * (1.0 - P.xi[i]) * Wi;
  }
  out.dm_dt = (pot - kin) / L + at;
  out.dm_ds = (kin - pot) / L + as;

  // nodal momenta from the cell fluxes w_{k+1/2} = phi_p(eps D_k)
  const Eigen::VectorXd& u = out.u_values;
  Eigen::VectorXd wc(N);
  for (int k = 0; k < N; ++k) wc[k] = phi(eps * (u[k + 1] - u[k]) / P.h, p);
  out.w_values.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double src = 0.5 * P.h / eps * P.av[i] * Wd.w_prime(u[i]);
    if (i == 0) {
      out.w_values[i] = wc[0] - src;
    } else if (i == N) {
      out.w_values[i] = wc[N - 1] + src;
    } else {
      out.w_values[i] = 0.5 * ((wc[i] - src) + (wc[i - 1] + src));
    }
  }
  const double flux_left = phi(out.w_values[0], ps) / eps;
  const double flux_right = phi(out.w_values[N], ps) / eps;
  if (kind == BoundaryKind::kNeumannDirichlet) {
    out.d_left = flux_left;
  } else {
    out.d_left = sign * std::pow(std::max(0.0, ps * (a(s) * W0 + out.dm_ds) / P.ep), 1.0 / p);
  }
  if (kind == BoundaryKind::kDirichletNeumann) {
    out.d_right = flux_right;
  } else {
    out.d_right = -sign * std::pow(std::max(0.0, ps * (a(t) * W0 - out.dm_dt) / P.ep), 1.0 / p);
  }
  return out;
}

std::pair<double, double> m_partials(const PieceMinimizer& pm, const WeightFunction& a,
                                     const DoubleWellPotential& Wd) {
  const double p = Wd.p(), ps = p / (p - 1.0), ep = std::pow(pm.eps, p);
  if (pm.trivial) return {-a(pm.s) * Wd.w_zero(), a(pm.t) * Wd.w_zero()};
  const double u0 = pm.u_values[0], u1 = pm.u_values[pm.u_values.size() - 1];
  const double ds = ep / ps * std::pow(std::abs(pm.d_left), p) - a(pm.s) * Wd.w(u0);
  const double dt = -ep / ps * std::pow(std::abs(pm.d_right), p) + a(pm.t) * Wd.w(u1);
  return {ds, dt};
}

Trajectory shoot_ivp(double eps, double x0, double u0, double w0, double x_end,
                     const WeightFunction& a, const DoubleWellPotential& Wd,
                     const OdeOptions& opt,
                     const std::function<bool(double, double, double)>& stop) {
  if (!(eps > 0.0)) throw DomainError("shoot_ivp: eps > 0 required");
  using DP = DormandPrince<2>;
  OdeOptions o = opt;
  o.h_max = std::min(o.h_max, 0.25 * eps);
  DP dp(o);
  const double ps = Wd.pexp().p_star();
  auto rhs = [&](double x, const DP::State& y) {
    DP::State d;
    d[0] = phi(y[1], ps) / eps;
    d[1] = a(x) * Wd.w_prime(y[0]) / eps;
    return d;
  };
  Trajectory tr;
  tr.eps = eps;
  tr.x.push_back(x0);
  tr.u.push_back(u0);
  tr.w.push_back(w0);
  double x = x0;
  DP::State y(u0, w0);
  dp.integrate(rhs, x, y, x_end, [&](double xx, DP::State& yy, const StepInfo&) {
    tr.x.push_back(xx);
    tr.u.push_back(yy[0]);
    tr.w.push_back(yy[1]);
    return !(stop && stop(xx, yy[0], yy[1]));
  });
  return tr;
}

int linearized_zero_count(double eps, double x0, double v0, double w0, double x1,
                          const WeightFunction& a, const DoubleWellPotential& Wd) {
  if (!(eps > 0.0)) throw DomainError("linearized_zero_count: eps > 0 required");
  using DP = DormandPrince<2>;
  const double p = Wd.p(), ps = Wd.pexp().p_star(), C0 = Wd.c_zero();
  DP dp(OdeOptions{1e-10, 1e-14, 0.0, 0.5 * eps});
  auto rhs = [&](double x, const DP::State& y) {
    DP::State d;
    d[0] = phi(y[1], ps) / eps;
    d[1] = -C0 * a(x) * phi(y[0], p) / eps;
    return d;
  };
  double x = x0;
  DP::State y(v0, w0);
  int last = v0 > 0.0 ? 1 : (v0 < 0.0 ? -1 : 0);
  int count = 0;
  dp.integrate(rhs, x, y, x1, [&](double xx, DP::State& yy, const StepInfo&) {
    const int sg = yy[0] > 0.0 ? 1 : (yy[0] < 0.0 ? -1 : 0);
    if (sg != 0 && xx != x1) {
      if (last != 0 && sg != last) ++count;
      last = sg;
    } else if (sg != 0 && last == 0) {
      last = sg;
    }
    return true;
  });
  return count;
}

int count_eigenvalues(double eps, double s, double t, const WeightFunction& a,
                      const DoubleWellPotential& Wd) {
  return linearized_zero_count(eps, s, 0.0, phi(eps, Wd.p()), t, a, Wd);
}

double prufer_g(double u, const DoubleWellPotential& Wd) {
  const double p = Wd.p();
  const double d = std::abs(u) <= 1.0 ? Wd.drop(u) : Wd.w_zero() - Wd.w(u);
  if (u == 0.0) return 0.0;
  return std::copysign(std::pow(p * std::max(d, 0.0), 1.0 / p), u);
}

double prufer_g_prime(double u, const DoubleWellPotential& Wd) {
  const double p = Wd.p();
  if (u == 0.0) return std::pow(Wd.c_zero(), 1.0 / p);
  const double d = std::abs(u) <= 1.0 ? Wd.drop(u) : Wd.w_zero() - Wd.w(u);
  if (!(d > 0.0)) return 0.0;
  return -std::copysign(1.0, u) * std::pow(p * d, 1.0 / p - 1.0) * Wd.w_prime(u);
}

Eigen::VectorXd prufer_angle(const Trajectory& tr, const WeightFunction& a,
                             const DoubleWellPotential& Wd) {
  const double p = Wd.p(), ps = Wd.pexp().p_star();
  const auto trig = PTrig::get(p);
  const double pip = trig->pi_p();
  const size_t n = tr.x.size();
  Eigen::VectorXd theta(n);
  for (size_t i = 0; i < n; ++i) {
    const double G = std::pow(a(tr.x[i]), 1.0 / p) * prufer_g(tr.u[i], Wd);
    const double w = tr.w[i];
    const double r2 = std::pow(std::abs(G), p) + p / ps * std::pow(std::abs(w), ps);
    if (!(r2 > 0.0)) {
      throw NumericalError("prufer_angle: degenerate trajectory (r = 0) at x = " + fmt(tr.x[i]),
                           tr.x[i]);
    }
    const double c = G / std::pow(r2, 1.0 / p), sn = w / std::pow(r2, 1.0 / ps);
    double th = trig->angle(c, sn);
    if (i > 0) {
      // unwrap to the branch nearest the previous sample
      const double prev = theta[i - 1];
      th += 2.0 * pip * std::round((prev - th) / (2.0 * pip));
    }
    theta[i] = th;
  }
  return theta;
}

Trajectory BVPSolution::trajectory() const {
  Trajectory tr;
  tr.eps = eps;
  tr.x.assign(x_grid.data(), x_grid.data() + x_grid.size());
  tr.u.assign(u_values.data(), u_values.data() + u_values.size());
  tr.w.assign(w_values.data(), w_values.data() + w_values.size());
  return tr;
}

// ---------------------------------------------------------------------------
// Partition maximization

double detect_h0(const std::vector<Block>& blocks, const WeightFunction& a) {
  if (blocks.empty()) throw ValidationError("at least one block", "no blocks given");
  double hmax = 1.0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string tag = "block " + std::to_string(i + 1);
    if (!(b.s > 0.0 && b.t < 1.0 && b.s < b.t)) {
      throw ValidationError("0 < s_i < t_i < 1", tag);
    }
    if (i > 0 && !(blocks[i - 1].t < b.s)) {
      throw ValidationError("blocks sorted and disjoint", tag);
    }
    if (!(a.a_prime(b.s) > 0.0 && a.a_prime(b.t) < 0.0)) {
      throw ValidationError("a'(s_i) > 0 > a'(t_i)",
                            tag + ": a'(s) = " + fmt(a.a_prime(b.s)) + ", a'(t) = " +
                                fmt(a.a_prime(b.t)));
    }
    hmax = std::min({hmax, b.s, 1.0 - b.t});
    if (i > 0) hmax = std::min(hmax, 0.5 * (b.s - blocks[i - 1].t));
  }
  const double step = 1e-4;
  double h = 0.0;
  for (double c = step; c <= hmax + 1e-15; c += step) {
    bool ok = true;
    for (const auto& b : blocks) ok = ok && a.a_prime(b.s - c) > 0.0 && a.a_prime(b.t + c) < 0.0;
    if (!ok) break;
    h = std::min(c, hmax);
  }
  if (!(h > 0.0)) throw ValidationError("h_0 > 0", "no margin with the required sign of a'");
  return h;
}

namespace {

struct Ascent {
  double eps;
  const WeightFunction& a;
  const DoubleWellPotential& Wd;
  const PartitionOptions& opt;
  std::vector<int> cells;
  std::vector<PieceMinimizer> pieces;
  Eigen::VectorXd lo, hi;  // windows of the junctions

  int n() const { return static_cast<int>(lo.size()); }

  BoundaryKind kind(int j) const {
    if (j == 0) return BoundaryKind::kNeumannDirichlet;
    if (j == n()) return BoundaryKind::kDirichletNeumann;
    return BoundaryKind::kDirichletDirichlet;
  }
  int sign(int j) const { return j % 2 == 0 ? 1 : -1; }

  PieceMinimizer solve(int j, const Eigen::VectorXd& tau) const {
    const double s = j == 0 ? 0.0 : tau[j - 1];
    const double t = j == n() ? 1.0 : tau[j];
    const Eigen::VectorXd* warm =
        j < static_cast<int>(pieces.size()) && !pieces[j].trivial ? &pieces[j].u_values : nullptr;
    return minimize_piece(eps, s, t, sign(j), kind(j), a, Wd, cells[j], warm, opt.piece);
  }

  // solve every piece touching one of the junctions in `which` (all if empty)
  std::vector<PieceMinimizer> solve_all(const Eigen::VectorXd& tau,
                                        const std::vector<int>& which = {}) const {
    std::vector<char> need(n() + 1, which.empty() ? 1 : 0);
    for (int j : which) need[j - 1] = need[j] = 1;
    std::vector<PieceMinimizer> out = pieces;
    out.resize(n() + 1);
    parallel_for(
        n() + 1,
        [&](long j) {
          if (need[j]) out[j] = solve(static_cast<int>(j), tau);
        },
        opt.jobs);
    return out;
  }

  static Eigen::VectorXd grad(const std::vector<PieceMinimizer>& ps) {
    const int n = static_cast<int>(ps.size()) - 1;
    Eigen::VectorXd g(n);
    for (int j = 1; j <= n; ++j) g[j - 1] = ps[j - 1].dm_dt + ps[j].dm_ds;
    return g;
  }
  static double value(const std::vector<PieceMinimizer>& ps) {
    double f = 0.0;
    for (const auto& pm : ps) f += pm.m_value;
    return f;
  }

  double min_gap() const { return 1e-3 * eps; }

  bool feasible(const Eigen::VectorXd& tau) const {
    for (int j = 0; j < n(); ++j) {
      if (tau[j] < lo[j] || tau[j] > hi[j]) return false;
      const double prev = j == 0 ? 0.0 : tau[j - 1];
      if (tau[j] - prev < min_gap()) return false;
    }
    return 1.0 - tau[n() - 1] >= min_gap();
  }

  // one pass of 1D root solves of df/dtau_j = 0 with the neighbours frozen
  void coordinate_sweep(Eigen::VectorXd& tau) {
    for (int j = 0; j < n(); ++j) {
      const double left = std::max(lo[j], (j == 0 ? 0.0 : tau[j - 1]) + min_gap());
      const double right = std::min(hi[j], (j + 1 == n() ? 1.0 : tau[j + 1]) - min_gap());
      auto eval = [&](double x) {
        Eigen::VectorXd tt = tau;
        tt[j] = x;
        auto ps = solve_all(tt, {j + 1});
        return std::make_pair(ps[j].dm_dt + ps[j + 1].dm_ds, ps);
      };
      double x0 = tau[j];
      auto [g0, ps0] = eval(x0);
      if (std::abs(g0) < opt.grad_tol) {
        pieces = ps0;
        continue;
      }
      // march in the ascent direction until the sign flips, then regula falsi
      double step = 0.05 * eps * (g0 > 0.0 ? 1.0 : -1.0);
      double x1 = x0, g1 = g0;
      auto ps1 = ps0;
      bool bracket = false;
      for (int k = 0; k < 40; ++k) {
        double xn = std::clamp(x1 + step, left, right);
        if (xn == x1) break;
        auto [gn, psn] = eval(xn);
        if ((gn > 0.0) != (g0 > 0.0)) {
          x0 = x1;
          g0 = g1;
          ps0 = ps1;
          x1 = xn;
          g1 = gn;
          ps1 = psn;
          bracket = true;
          break;
        }
        x1 = xn;
        g1 = gn;
        ps1 = psn;
        step *= 2.0;
      }
      if (!bracket) {
        tau[j] = x1;
        pieces = ps1;
        continue;
      }
      int side = 0;
      for (int k = 0; k < 60; ++k) {
        double xm = x1 - g1 * (x1 - x0) / (g1 - g0);
        if (!(xm > std::min(x0, x1) && xm < std::max(x0, x1))) xm = 0.5 * (x0 + x1);
        auto [gm, psm] = eval(xm);
        if (std::abs(gm) < opt.grad_tol || std::abs(x1 - x0) < 1e-14) {
          x1 = xm;
          ps1 = psm;
          break;
        }
        if ((gm > 0.0) == (g1 > 0.0)) {
          x1 = xm;
          g1 = gm;
          ps1 = psm;
          if (side == 1) g0 *= 0.5;
          side = 1;
        } else {
          x0 = xm;
          g0 = gm;
          ps0 = psm;
          if (side == -1) g1 *= 0.5;
          side = -1;
        }
      }
      tau[j] = x1;
      pieces = ps1;
    }
  }
};

}  // namespace

std::pair<Partition, BVPSolution> maximize_partition(double eps, const std::vector<Block>& blocks,
                                                     const WeightFunction& a,
                                                     const DoubleWellPotential& Wd,
                                                     const TimeMapTable& table,
                                                     const PartitionOptions& opt) {
  if (!(eps > 0.0)) throw DomainError("maximize_partition: eps > 0 required");
  Partition part;
  part.h0 = opt.h0 > 0.0 ? opt.h0 : detect_h0(blocks, a);
  if (opt.h0 > 0.0) detect_h0(blocks, a);  // still checks the block invariants

  // target profile, counts and starting junctions from the zero density
  SupportSpec A;
  for (const auto& b : blocks) A.intervals.push_back({b.s, b.t, SupportType::kInterior});
  validate_support(A, a);
  std::vector<double> tau0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const double I = zero_count_integral(A, a, table, b.s, b.t);
    part.density_integrals.push_back(I);
    const int n = b.count > 0 ? b.count : std::max(1, static_cast<int>(std::lround(I / eps)));
    part.counts.push_back(n);
    part.windows.emplace_back(b.s - part.h0, b.t + part.h0);
    // cumulative density on a fine grid, inverted at the levels (k - 1/2)/n
    const int M = 400;
    std::vector<double> xs(M + 1), cum(M + 1, 0.0);
    for (int k = 0; k <= M; ++k) xs[k] = b.s + (b.t - b.s) * k / M;
    for (int k = 0; k < M; ++k) {
      cum[k + 1] = cum[k] + gauss_fixed(
                                [&](double x) {
                                  return zero_density(a(x), profile_value(A, a, table, x), table);
                                },
                                xs[k], xs[k + 1], 8);
    }
    for (int k = 1; k <= n; ++k) {
      const double level = (k - 0.5) / n * cum[M];
      const auto it = std::lower_bound(cum.begin(), cum.end(), level);
      const size_t m = std::clamp<size_t>(it - cum.begin(), 1, M);
      const double w = (level - cum[m - 1]) / std::max(cum[m] - cum[m - 1], 1e-300);
      tau0.push_back(xs[m - 1] + w * (xs[m] - xs[m - 1]));
    }
  }
  const int n = static_cast<int>(tau0.size());
  Eigen::VectorXd tau = Eigen::Map<Eigen::VectorXd>(tau0.data(), n);

  Ascent S{eps, a, Wd, opt, {}, {}, Eigen::VectorXd(n), Eigen::VectorXd(n)};
  {
    int j = 0;
    for (size_t i = 0; i < blocks.size(); ++i) {
      for (int k = 0; k < part.counts[i]; ++k, ++j) {
        S.lo[j] = part.windows[i].first;
        S.hi[j] = part.windows[i].second;
      }
    }
  }
  for (int j = 0; j <= n; ++j) {
    const double len = (j == n ? 1.0 : tau[j]) - (j == 0 ? 0.0 : tau[j - 1]);
    S.cells.push_back(
        std::max(opt.min_cells, static_cast<int>(std::ceil(opt.cells_per_eps * len / eps))));
  }
  S.pieces = S.solve_all(tau);

  BVPSolution sol;
  sol.eps = eps;
  for (int k = 0; k < opt.coordinate_sweeps; ++k) {
    S.coordinate_sweep(tau);
    ++sol.sweeps;
  }

  // Newton on the junctions with a finite-difference tridiagonal Hessian
  Eigen::VectorXd g = Ascent::grad(S.pieces);
  double f = Ascent::value(S.pieces);
  for (int it = 0; it < opt.max_newton && g.lpNorm<Eigen::Infinity>() > opt.grad_tol; ++it) {
    const double delta = 1e-6 * eps;
    std::vector<double> diag(n), off(std::max(n - 1, 0), 0.0), sub(std::max(n - 1, 0), 0.0);
    for (int color = 0; color < 3; ++color) {
      Eigen::VectorXd tt = tau;
      std::vector<int> which;
      for (int j = color; j < n; j += 3) {
        // step away from the nearer neighbour to stay feasible
        tt[j] += delta;
        which.push_back(j + 1);
      }
      if (which.empty()) continue;
      const Eigen::VectorXd gp = Ascent::grad(S.solve_all(tt, which));
      for (int j = color; j < n; j += 3) {
        diag[j] = (gp[j] - g[j]) / delta;
        if (j + 1 < n) off[j] = (gp[j + 1] - g[j + 1]) / delta;
        if (j > 0) sub[j - 1] = (gp[j - 1] - g[j - 1]) / delta;
      }
    }
    // maximize: solve (-H) d = g with -H symmetrized and shifted to be SPD
    std::vector<double> nd(n), no(std::max(n - 1, 0));
    double dmax = 0.0;
    for (int j = 0; j < n; ++j) dmax = std::max(dmax, std::abs(diag[j]));
    for (int j = 0; j + 1 < n; ++j) no[j] = -0.5 * (off[j] + sub[j]);
    std::vector<double> d;
    double shift = 0.0;
    for (int tries = 0; tries < 100; ++tries) {
      for (int j = 0; j < n; ++j) nd[j] = -diag[j] + shift;
      d.assign(g.data(), g.data() + n);
      if (solve_spd_tridiag(nd, no, d)) break;
      shift = std::max(4.0 * shift, 1e-6 * dmax);
    }
    ++sol.newton_steps;
    double alpha = 1.0;
    bool accepted = false;
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      Eigen::VectorXd tn = tau;
      for (int j = 0; j < n; ++j) tn[j] += alpha * d[j];
      if (!S.feasible(tn)) continue;
      auto ps = S.solve_all(tn);
      const double fn = Ascent::value(ps);
      const Eigen::VectorXd gn = Ascent::grad(ps);
      if (fn >= f - 1e-13 * std::abs(f) || gn.lpNorm<Eigen::Infinity>() < 0.5 * gnorm) {
        tau = tn;
        S.pieces = std::move(ps);
        f = fn;
        g = gn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // fall back to a coordinate sweep, which only ever increases f
      S.coordinate_sweep(tau);
      ++sol.sweeps;
      g = Ascent::grad(S.pieces);
      f = Ascent::value(S.pieces);
    }
  }
  if (g.lpNorm<Eigen::Infinity>() > opt.grad_tol) {
    throw OptimizationError("maximize_partition: junction gradient did not converge",
                            g.lpNorm<Eigen::Infinity>());
  }
  for (int j = 0; j < n; ++j) {
    const double m = std::min(tau[j] - S.lo[j], S.hi[j] - tau[j]);
    if (m < 1e-9) {
      throw ConstructionError("maximizer on the boundary of the junction windows", j + 1);
    }
  }
  for (int j = 0; j <= n; ++j) {
    if (S.pieces[j].trivial) throw ConstructionError("trivial piece minimizer", j);
  }

  // assembly
  part.tau = tau;
  sol.tau_star = part;
  sol.pieces = S.pieces;
  sol.f_value = f;
  sol.zero_locations = tau;
  std::vector<double> X, U, Wm;
  for (int j = 0; j <= n; ++j) {
    const auto& pm = S.pieces[j];
    const int N = static_cast<int>(pm.x_grid.size()) - 1;
    for (int i = j == 0 ? 0 : 1; i <= N; ++i) {
      X.push_back(pm.x_grid[i]);
      U.push_back(pm.u_values[i]);
      double w = pm.w_values[i];
      // junction: average of the momenta recovered on the two sides
      if (i == N && j < n) w = 0.5 * (w + S.pieces[j + 1].w_values[0]);
      Wm.push_back(w);
    }
    sol.el_residual = std::max(sol.el_residual, pm.residual);
  }
  const double ps = Wd.pexp().p_star();
  sol.x_grid = Eigen::Map<Eigen::VectorXd>(X.data(), static_cast<Eigen::Index>(X.size()));
  sol.u_values = Eigen::Map<Eigen::VectorXd>(U.data(), static_cast<Eigen::Index>(U.size()));
  sol.w_values = Eigen::Map<Eigen::VectorXd>(Wm.data(), static_cast<Eigen::Index>(Wm.size()));
  sol.uprime_values = sol.w_values.unaryExpr([&](double w) { return phi(w, ps) / eps; });
  for (int j = 1; j <= n; ++j) {
    const auto& L = S.pieces[j - 1];
    const auto& R = S.pieces[j];
    sol.junction_mismatch =
        std::max(sol.junction_mismatch, std::abs(std::abs(L.d_right) - std::abs(R.d_left)));
    // same from the momenta recovered from the neighbouring cells
    const double fl = L.w_values[L.w_values.size() - 1], fr = R.w_values[0];
    sol.junction_flux_mismatch =
        std::max(sol.junction_flux_mismatch,
                 std::abs(std::abs(phi(fl, ps)) - std::abs(phi(fr, ps))) / eps);
  }
  sol.neumann_left = std::abs(S.pieces.front().d_left);
  sol.neumann_right = std::abs(S.pieces.back().d_right);
  return {part, sol};
}

}  // namespace plap
