#include <doctest.h>

#include "plap/errors.hpp"
#include "plap/limit_profile.hpp"
#include "support.hpp"

using namespace plap;
using testsupport::Gen;

TEST_CASE("type ii profile on (0, 1] for a = 1 + x") {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto W = make_allen_cahn(PExponent(p));
    const TimeMapTable tab(W, 1.0);
    const auto a = weight_from_expression("1 + x");
    SupportSpec A;
    A.intervals.push_back({0.0, 1.0, SupportType::kRightEnd});
    const EnergyProfile E = construct_profile(A, a, tab);
    CHECK(profile_residual(E, a, tab) < 1e-6);
    // separation of variables: G(E(x)) = log(a(x)/a(0))
    Gen g(1);
    for (int k = 0; k < 30; ++k) {
      const double x = g.uniform(1e-6, 1.0);
      const double v = profile_value(A, a, tab, x);
      CHECK(k_antiderivative(v, tab) == doctest::Approx(std::log(1.0 + x)).epsilon(1e-10));
      CHECK(v > 0.0);
      CHECK(v < W.w_zero());
    }
    // against the delta-regularized forward integration
    Eigen::VectorXd xs(5);
    xs << 0.01, 0.1, 0.3, 0.6, 1.0;
    const Eigen::VectorXd F =
        forward_profile(A.intervals[0], a, [&](double e) { return unit_k(e, tab); }, xs);
    for (Eigen::Index i = 0; i < xs.size(); ++i)
      CHECK(std::abs(F[i] - profile_value(A, a, tab, xs[i])) < 1e-4 * profile_value(A, a, tab, xs[i]));
  }
}

TEST_CASE("interior component vanishes at both edges and off the support") {
  const auto W = make_allen_cahn(PExponent(2.0));
  const TimeMapTable tab(W, 1.0);
  const auto a = weight_from_expression("1.5 + 0.5*cos(20*pi/3*(x - 0.35))");
  SupportSpec A;
  A.intervals.push_back({0.23, 0.47, SupportType::kInterior});
  A.intervals.push_back({0.53, 0.77, SupportType::kInterior});
  CHECK_NOTHROW(validate_support(A, a));
  const EnergyProfile E = construct_profile(A, a, tab);
  for (Eigen::Index i = 0; i < E.x_grid.size(); ++i) {
    const double x = E.x_grid[i];
    const bool in = (x > 0.23 && x < 0.47) || (x > 0.53 && x < 0.77);
    if (!in) CHECK(E.e_values[i] == 0.0);
    if (in) CHECK(E.e_values[i] > 0.0);
  }
  CHECK(profile_value(A, a, tab, 0.35) == doctest::Approx(profile_value(A, a, tab, 0.65)).epsilon(1e-10));
  // symmetric about the maximum of a
  Gen g(2);
  for (int k = 0; k < 20; ++k) {
    const double d = g.uniform(0.0, 0.12);
    CHECK(profile_value(A, a, tab, 0.35 - d) == doctest::Approx(profile_value(A, a, tab, 0.35 + d)).epsilon(1e-9));
  }
}

TEST_CASE("support validation names the violated condition") {
  const auto a = weight_from_expression("1 + x");
  SupportSpec bad;
  bad.intervals.push_back({0.2, 0.6, SupportType::kInterior});  // a(0.2) != a(0.6)
  CHECK_THROWS_AS(validate_support(bad, a), ValidationError);
  SupportSpec left;
  left.intervals.push_back({0.0, 0.5, SupportType::kLeftEnd});  // needs a > a(t) on [0, t)
  CHECK_THROWS_AS(validate_support(left, a), ValidationError);
  SupportSpec overlap;
  overlap.intervals.push_back({0.5, 1.0, SupportType::kRightEnd});
  overlap.intervals.push_back({0.3, 1.0, SupportType::kRightEnd});
  CHECK_THROWS_AS(validate_support(overlap, a), ValidationError);
  const auto dip = weight_from_expression("1 + (x - 0.5)^2");
  SupportSpec wrong_shape;
  wrong_shape.intervals.push_back({0.3, 0.7, SupportType::kInterior});  // a < a(s) inside
  CHECK_THROWS_AS(validate_support(wrong_shape, dip), ValidationError);
}

TEST_CASE("unit-weight quantities from a table at another weight") {
  const auto W = make_allen_cahn(PExponent(3.0));
  const TimeMapTable t3(W, 3.0), t1(W, 1.0);
  Gen g(3);
  for (int k = 0; k < 20; ++k) {
    const double xi = W.w_zero() * g.uniform(0.01, 0.99);
    CHECK(unit_t(xi, t3) == doctest::Approx(time_map(xi, 1.0, W)).epsilon(1e-7));
    CHECK(unit_k(xi, t3) == doctest::Approx(kinetic_avg(xi, 1.0, W)).epsilon(1e-7));
    CHECK(k_antiderivative(xi, t3) == doctest::Approx(t1.G(xi)).epsilon(1e-7));
    const double y = k_antiderivative(xi, t1);
    CHECK(k_antiderivative_inv(y, t1) == doctest::Approx(xi).epsilon(1e-10));
  }
}

TEST_CASE("zero density limits and the zero-count integral") {
  const PExponent P(2.0);
  const auto W = make_allen_cahn(P);
  const TimeMapTable tab(W, 1.0);
  CHECK(zero_density(2.0, 0.0, tab) == 0.0);
  CHECK(zero_density(4.0, W.w_zero(), tab) == doctest::Approx(2.0 / M_PI));  // (4*1)^{1/2}/pi
  const auto a = weight_from_expression("1.5 + 0.5*cos(20*pi/3*(x - 0.35))");
  SupportSpec A;
  A.intervals.push_back({0.23, 0.47, SupportType::kInterior});
  A.intervals.push_back({0.53, 0.77, SupportType::kInterior});
  const double I = zero_count_integral(A, a, tab);
  const double I1 = zero_count_integral(A, a, tab, 0.0, 0.5);
  const double I2 = zero_count_integral(A, a, tab, 0.5, 1.0);
  CHECK(I == doctest::Approx(I1 + I2).epsilon(1e-10));
  CHECK(I1 == doctest::Approx(I2).epsilon(1e-8));
  // independent panel sum of 2 a^{1/p}/T(E) with T from the closed form
  auto dens = [&](double x) {
    const double e = profile_value(A, a, tab, x);
    if (e <= 0.0) return 0.0;
    return 2.0 * std::sqrt(a(x)) / testsupport::allen_cahn_period(e);
  };
  const double ref = testsupport::graded_gl(dens, 0.23, 0.35) + testsupport::graded_gl(dens, 0.35, 0.47);
  CHECK(I1 == doctest::Approx(ref).epsilon(1e-6));
}
