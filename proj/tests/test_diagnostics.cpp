#include <doctest.h>

#include "plap/diagnostics.hpp"
#include "plap/errors.hpp"
#include "support.hpp"

using namespace plap;
using testsupport::Gen;

namespace {

Eigen::VectorXd grid(int n, double lo = 0.0, double hi = 1.0) {
  return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

}  // namespace

TEST_CASE("energy trace is flat along an autonomous trajectory") {
  for (double p : {2.0, 3.0}) {
    const auto W = make_allen_cahn(PExponent(p));
    const auto a = constant_weight(1.3);
    const double eps = 0.05;
    const Trajectory tr = shoot_ivp(eps, 0.0, 0.2, 0.0, 0.6, a, W, {1e-12, 1e-14});
    // resample uniformly by dense re-integration between samples
    const int n = 3001;
    Eigen::VectorXd x = grid(n, 0.0, 0.6), u(n), w(n);
    u[0] = 0.2;
    w[0] = 0.0;
    for (int i = 1; i < n; ++i) {
      const Trajectory s = shoot_ivp(eps, x[i - 1], u[i - 1], w[i - 1], x[i], a, W, {1e-12, 1e-14});
      u[i] = s.u.back();
      w[i] = s.w.back();
    }
    const EnergyTrace et = energy_trace(eps, x, u, w, a, W);
    const double e0 = W.w(0.2);
    CHECK((et.e_values.array() - e0).abs().maxCoeff() < 1e-9);
    CHECK(et.max_residual < 1e-5);
    (void)tr;
  }
}

TEST_CASE("energy trace follows E' = (a'/a^2) L(eps u') for a varying weight") {
  const auto W = make_allen_cahn(PExponent(2.0));
  const auto a = weight_from_expression("1 + 0.5*x");
  const double eps = 0.05;
  const int n = 4001;
  Eigen::VectorXd x = grid(n, 0.0, 0.5), u(n), w(n);
  u[0] = 0.3;
  w[0] = 0.0;
  for (int i = 1; i < n; ++i) {
    const Trajectory s = shoot_ivp(eps, x[i - 1], u[i - 1], w[i - 1], x[i], a, W, {1e-12, 1e-14});
    u[i] = s.u.back();
    w[i] = s.w.back();
  }
  const EnergyTrace et = energy_trace(eps, x, u, w, a, W);
  CHECK(et.max_residual < 1e-4);
  // and E really moves, so the residual is not trivially small
  CHECK(et.e_values.maxCoeff() - et.e_values.minCoeff() > 1e-3);
}

TEST_CASE("Landau-Kolmogorov on cos(pi x) has the closed-form sides") {
  const int n = 20001;
  const Eigen::VectorXd x = grid(n);
  const Eigen::VectorXd v = (M_PI * x.array()).cos().matrix();
  const Eigen::VectorXd vp = (-M_PI * (M_PI * x.array()).sin()).matrix();
  const LandauReport r = landau_check(x, v, vp, PExponent(2.0));
  // ||v'||^2 = pi^2, 4 ||v|| ||v''|| = 4 pi^2
  CHECK(r.lhs == doctest::Approx(M_PI * M_PI).epsilon(1e-6));
  CHECK(r.rhs == doctest::Approx(4 * M_PI * M_PI).epsilon(1e-6));
  CHECK(r.margin == doctest::Approx(3 * M_PI * M_PI).epsilon(1e-6));
  CHECK(r.coarse_margin > 0.0);
  // finite-difference v' gives the same answer
  const LandauReport r2 = landau_check(x, v, PExponent(2.0));
  CHECK(r2.margin == doctest::Approx(r.margin).epsilon(1e-6));
}

TEST_CASE("Landau-Kolmogorov margin on random Neumann cosine sums") {
  Gen g(17);
  const Eigen::VectorXd x = grid(801);
  for (double p : {1.5, 2.0, 3.0}) {
    const PExponent P(p);
    for (int k = 0; k < 200; ++k) {
      const int terms = g.integer(1, 6);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size()), vp = v;
      for (int j = 1; j <= terms; ++j) {
        const double c = g.uniform(-1.0, 1.0);
        v += c * (j * M_PI * x.array()).cos().matrix();
        vp -= c * j * M_PI * (j * M_PI * x.array()).sin().matrix();
      }
      vp[0] = 0.0;
      vp[x.size() - 1] = 0.0;
      CHECK(landau_check(x, v, vp, P).margin >= -1e-8);
    }
  }
}

TEST_CASE("Landau check preconditions") {
  const Eigen::VectorXd x = grid(101);
  const Eigen::VectorXd v = (M_PI * x.array()).sin().matrix();
  CHECK_THROWS_AS(landau_check(x, v, PExponent(2.0)), ValidationError);
  CHECK_THROWS_AS(landau_check(grid(4), grid(4), PExponent(2.0)), DomainError);
}

TEST_CASE("layer decay recovers the rate of a synthetic double layer") {
  Gen g(5);
  for (int k = 0; k < 5; ++k) {
    const double eps = g.uniform(0.01, 0.03), rate = g.uniform(0.8, 2.5);
    const double s = 0.1, t = 0.9;
    const int n = 20001;
    const Eigen::VectorXd x = grid(n, s, t);
    Eigen::VectorXd u(n), up(n);
    for (int i = 0; i < n; ++i) {
      // product of tanh layers: |1 - u| + |eps u'| ~ 4 exp(-2 c d) with c = rate/2
      const double c = 0.5 * rate;
      const double l = std::tanh(c * (x[i] - s) / eps), r = std::tanh(c * (t - x[i]) / eps);
      u[i] = l * r;
      up[i] = c / eps * ((1 - l * l) * r - l * (1 - r * r));
    }
    const LayerDecayFit f = layer_decay_check(eps, x, u, up, {{s, t}});
    CHECK(f.K2 == doctest::Approx(rate).epsilon(0.03));
    CHECK(f.K1 > 0.0);
    CHECK(f.coverage >= 0.99);
    double gap = 0.0;
    for (int i = 0; i < n; ++i)
      if (x[i] >= s + (t - s) / 3 && x[i] <= t - (t - s) / 3) gap = std::max(gap, std::abs(1 - u[i]));
    CHECK(f.plateau_gap == doctest::Approx(gap).epsilon(1e-6));
  }
  // u leaving [0, 1] violates the precondition
  const Eigen::VectorXd x = grid(101);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(101, 1.5);
  CHECK_THROWS_AS(layer_decay_check(0.1, x, u, Eigen::VectorXd::Zero(101), {{0.0, 1.0}}), ValidationError);
}

TEST_CASE("zeros from sign changes and exact nodal zeros") {
  BVPSolution sol;
  sol.x_grid = grid(5);
  sol.u_values.resize(5);
  sol.u_values << 1.0, 0.0, -1.0, -1.0, 3.0;
  const Eigen::VectorXd z = solution_zeros(sol);
  REQUIRE(z.size() == 2);
  CHECK(z[0] == 0.25);
  CHECK(z[1] == doctest::Approx(0.75 + 0.25 * 0.25));
}

TEST_CASE("zero-count and accumulation reports on prescribed zeros") {
  const auto W = make_allen_cahn(PExponent(2.0));
  const TimeMapTable tab(W, 1.0);
  const auto a = weight_from_expression("1.5 + 0.5*cos(20*pi/3*(x - 0.35))");
  SupportSpec A;
  A.intervals.push_back({0.23, 0.47, SupportType::kInterior});
  A.intervals.push_back({0.53, 0.77, SupportType::kInterior});
  const EnergyProfile E = construct_profile(A, a, tab);
  const double I = zero_count_integral(A, a, tab);

  auto make = [&](double eps, std::vector<double> zs) {
    BVPSolution s;
    s.eps = eps;
    s.zero_locations = Eigen::Map<Eigen::VectorXd>(zs.data(), static_cast<Eigen::Index>(zs.size()));
    return s;
  };
  const std::vector<BVPSolution> sweep = {
      make(0.05, {0.35, 0.65}),
      make(0.025, {0.30, 0.35, 0.40, 0.60, 0.65, 0.70}),
      make(0.0125, {0.26, 0.30, 0.35, 0.40, 0.44, 0.56, 0.60, 0.65, 0.70, 0.74}),
  };
  const ZeroCountReport zr = zero_count_report(sweep, E, a, tab);
  REQUIRE(zr.levels.size() == 3);
  CHECK(zr.integral == doctest::Approx(I).epsilon(1e-12));
  const int counts[] = {2, 6, 10};
  for (int l = 0; l < 3; ++l) {
    CHECK(zr.levels[l].zeros == counts[l]);
    CHECK(zr.levels[l].eps_z == doctest::Approx(sweep[l].eps * counts[l]));
    CHECK(zr.levels[l].rel_error == doctest::Approx(std::abs(sweep[l].eps * counts[l] - I) / I));
    CHECK(zr.levels[l].block_zeros == std::vector<int>{counts[l] / 2, counts[l] / 2});
  }

  const AccumulationReport ar = accumulation_report(sweep, E, a, tab);
  // a' vanishes at 0.05 + 0.15 k on [0, 1]
  REQUIRE(ar.critical_points.size() == 7);
  for (int k = 0; k < 7; ++k) CHECK(ar.critical_points[k] == doctest::Approx(0.05 + 0.15 * k).epsilon(1e-6));
  // farthest support point from the zeros: edge 0.23 vs zero 0.35, then 0.30, then 0.26
  CHECK(ar.levels[0].support_to_zeros == doctest::Approx(0.12));
  CHECK(ar.levels[1].support_to_zeros == doctest::Approx(0.07));
  CHECK(ar.levels[2].support_to_zeros == doctest::Approx(0.03).epsilon(1e-2));
  CHECK(ar.support_distance_shrinks());
  for (const auto& lv : ar.levels) CHECK(lv.zeros_to_set == 0.0);
  CHECK(ar.zero_distance_shrinks());
}
