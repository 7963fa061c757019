#include "plap/limit_profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/ode.hpp"
#include "plap/quadrature.hpp"

namespace plap {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// The edge where E vanishes and from which the separated formula starts.
double anchor(const SupportInterval& c) { return c.type == SupportType::kLeftEnd ? c.t : c.s; }

bool inside(const SupportInterval& c, double x) {
  switch (c.type) {
    case SupportType::kInterior:
      return x > c.s && x < c.t;
    case SupportType::kRightEnd:
      return x > c.s && x <= 1.0;
    case SupportType::kLeftEnd:
      return x >= 0.0 && x < c.t;
  }
  return false;
}

}  // namespace

void validate_support(const SupportSpec& A, const WeightFunction& a) {
  const auto& iv = A.intervals;
  for (size_t k = 0; k < iv.size(); ++k) {
    const auto& c = iv[k];
    const std::string tag = "support interval " + std::to_string(k + 1);
    if (!(c.s >= 0.0 && c.t <= 1.0 && c.s < c.t)) {
      throw ValidationError("0 <= s < t <= 1", tag + ": (" + fmt(c.s) + ", " + fmt(c.t) + ")");
    }
    if (c.type == SupportType::kRightEnd && c.t != 1.0) {
      throw ValidationError("type-ii interval ends at 1", tag + ": t = " + fmt(c.t));
    }
    if (c.type == SupportType::kLeftEnd && c.s != 0.0) {
      throw ValidationError("type-iii interval starts at 0", tag + ": s = " + fmt(c.s));
    }
    if (k > 0 && iv[k - 1].t > c.s) {
      throw ValidationError("support intervals sorted and disjoint", tag);
    }
    if (k > 0 && iv[k - 1].t == c.s &&
        (iv[k - 1].type != SupportType::kInterior && iv[k - 1].type != SupportType::kLeftEnd)) {
      throw ValidationError("support intervals sorted and disjoint", tag);
    }
    if (c.type == SupportType::kInterior) {
      const double as = a(c.s), at = a(c.t);
      const bool match = A.exact_match ? as == at
                                       : std::abs(as - at) <=
                                             A.rel_tol * std::max(std::abs(as), std::abs(at));
      if (!match) {
        throw ValidationError("a(s) = a(t)",
                              tag + ": a(s) = " + fmt(as) + ", a(t) = " + fmt(at));
      }
    }
    const double ref = a(anchor(c));
    // for interior components the far edge may sit below a(s) by the tolerance
    const double floor = c.type == SupportType::kInterior ? std::min(ref, a(c.t)) : ref;
    for (int i = 1; i <= A.samples; ++i) {
      const double x = c.s + (c.t - c.s) * i / (A.samples + 1.0);
      if (!(a(x) > floor)) {
        const std::string rel = c.type == SupportType::kLeftEnd ? "a(x) > a(t)" : "a(x) > a(s)";
        throw ValidationError(rel, tag + ": fails at x = " + fmt(x));
      }
    }
    // closed ends of type ii / iii
    if (c.type == SupportType::kRightEnd && !(a(1.0) > ref)) {
      throw ValidationError("a(x) > a(s)", tag + ": fails at x = 1");
    }
    if (c.type == SupportType::kLeftEnd && !(a(0.0) > ref)) {
      throw ValidationError("a(x) > a(t)", tag + ": fails at x = 0");
    }
  }
}

double EnergyProfile::operator()(double x) const {
  const Eigen::Index n = x_grid.size();
  if (n == 0) return 0.0;
  if (x <= x_grid[0]) return e_values[0];
  if (x >= x_grid[n - 1]) return e_values[n - 1];
  const double* b = x_grid.data();
  const Eigen::Index i = std::upper_bound(b, b + n, x) - b - 1;
  const double w = (x - x_grid[i]) / (x_grid[i + 1] - x_grid[i]);
  return (1.0 - w) * e_values[i] + w * e_values[i + 1];
}

double k_antiderivative(double E, const TimeMapTable& table) {
  return table.a_ref() * table.G(E);
}

double k_antiderivative_inv(double y, const TimeMapTable& table) {
  return table.G_inv(y / table.a_ref());
}

double unit_k(double xi, const TimeMapTable& table) {
  if (xi <= 0.0 || xi >= table.w_zero()) return 0.0;
  return table.K(xi) / table.a_ref();
}

double unit_t(double xi, const TimeMapTable& table) {
  return std::pow(table.a_ref(), 1.0 / table.p()) * table.T(xi);
}

double zero_density(double a_value, double E, const TimeMapTable& table) {
  if (E <= 0.0) return 0.0;
  return 2.0 * std::pow(a_value, 1.0 / table.p()) / unit_t(E, table);
}

double zero_count_integral(const SupportSpec& A, const WeightFunction& a,
                           const TimeMapTable& table, double lo, double hi) {
  double sum = 0.0;
  for (const auto& c : A.intervals) {
    const double l = std::max(lo, c.s), r = std::min(hi, c.t);
    if (!(r > l)) continue;
    auto f = [&](double x) { return zero_density(a(x), profile_value(A, a, table, x), table); };
    sum += gauss_kronrod(f, l, r, 1e-9, 1e-12, 4000).value;
  }
  return sum;
}

double profile_value(const SupportSpec& A, const WeightFunction& a, const TimeMapTable& table,
                     double x) {
  for (const auto& c : A.intervals) {
    if (!inside(c, x)) continue;
    const double y = std::log(a(x) / a(anchor(c)));
    return y > 0.0 ? k_antiderivative_inv(y, table) : 0.0;
  }
  return 0.0;
}

EnergyProfile construct_profile(const SupportSpec& A, const WeightFunction& a,
                                const TimeMapTable& table, const ProfileGrid& grid) {
  if (grid.uniform < 3 || !(grid.ratio > 1.0) || !(grid.first > 0.0)) {
    throw DomainError("construct_profile: bad grid parameters");
  }
  validate_support(A, a);
  std::vector<double> xs;
  const double h = 1.0 / (grid.uniform - 1);
  for (int i = 0; i < grid.uniform; ++i) xs.push_back(i * h);
  for (const auto& c : A.intervals) {
    std::vector<double> edges;
    if (c.type != SupportType::kLeftEnd) edges.push_back(c.s);
    if (c.type != SupportType::kRightEnd) edges.push_back(c.t);
    for (const double e : edges) {
      xs.push_back(e);
      // graded offsets on both sides, until the local step reaches h
      for (double d = grid.first; d * (grid.ratio - 1.0) < h; d *= grid.ratio) {
        if (e + d <= 1.0) xs.push_back(e + d);
        if (e - d >= 0.0) xs.push_back(e - d);
      }
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double u, double v) { return std::abs(u - v) < 1e-15; }),
           xs.end());

  EnergyProfile E;
  E.support = A;
  E.w_zero = table.w_zero();
  E.x_grid = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  E.e_values.resize(E.x_grid.size());
  for (Eigen::Index i = 0; i < E.x_grid.size(); ++i) {
    const double v = profile_value(A, a, table, E.x_grid[i]);
    if (!(v >= 0.0 && v < E.w_zero)) {
      throw NumericalError("construct_profile: G inversion out of range at x = " +
                               fmt(E.x_grid[i]),
                           v);
    }
    E.e_values[i] = v;
  }
  return E;
}

Eigen::VectorXd profile_residuals(const EnergyProfile& E, const WeightFunction& a,
                                  const TimeMapTable& table) {
  const Eigen::Index n = E.x_grid.size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  if (n < 3) return r;
  // component index of each node (-1 off A); edges belong to both sides
  auto comp_of = [&](double x) {
    for (size_t k = 0; k < E.support.intervals.size(); ++k) {
      if (inside(E.support.intervals[k], x)) return static_cast<int>(k);
    }
    return -1;
  };
  std::vector<int> tag(n);
  for (Eigen::Index i = 0; i < n; ++i) tag[i] = comp_of(E.x_grid[i]);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (tag[i - 1] != tag[i] || tag[i + 1] != tag[i]) continue;
    const double x0 = E.x_grid[i - 1], x1 = E.x_grid[i], x2 = E.x_grid[i + 1];
    const double h0 = x1 - x0, h1 = x2 - x1;
    const double d = -h1 / (h0 * (h0 + h1)) * E.e_values[i - 1] +
                     (h1 - h0) / (h0 * h1) * E.e_values[i] +
                     h0 / (h1 * (h0 + h1)) * E.e_values[i + 1];
    const double rhs = a.a_prime(x1) / a(x1) * unit_k(E.e_values[i], table);
    r[i] = std::abs(d - rhs);
  }
  return r;
}

double profile_residual(const EnergyProfile& E, const WeightFunction& a,
                        const TimeMapTable& table) {
  const Eigen::VectorXd r = profile_residuals(E, a, table);
  return r.size() ? r.maxCoeff() : 0.0;
}

Eigen::VectorXd forward_profile(const SupportInterval& comp, const WeightFunction& a,
                                const std::function<double(double)>& K, const Eigen::VectorXd& xs,
                                double delta) {
  using DP = DormandPrince<1>;
  DP dp(OdeOptions{1e-12, 1e-15});
  auto rhs = [&](double x, const DP::State& y) {
    DP::State d;
    d[0] = y[0] > 0.0 ? a.a_prime(x) / a(x) * K(y[0]) : 0.0;
    return d;
  };
  // interior components: march from s up to the maximum of a, from t down to it
  double split = comp.type == SupportType::kLeftEnd ? 0.0 : 1.0;
  if (comp.type == SupportType::kInterior) {
    double best = -1.0;
    for (int i = 1; i < 1000; ++i) {
      const double x = comp.s + (comp.t - comp.s) * i / 1000.0;
      if (a(x) > best) {
        best = a(x);
        split = x;
      }
    }
  }
  auto march = [&](double d0) {
    Eigen::VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      const double xi = xs[i];
      const bool from_left = comp.type == SupportType::kRightEnd ||
                             (comp.type == SupportType::kInterior && xi <= split);
      double x = from_left ? comp.s : comp.t;
      DP::State y;
      y[0] = d0;
      dp.integrate(rhs, x, y, xi);
      out[i] = y[0];
    }
    return out;
  };
  const Eigen::VectorXd e1 = march(delta), e2 = march(0.5 * delta);
  return 2.0 * e2 - e1;
}

}  // namespace plap
