#include <doctest.h>

#include "plap/errors.hpp"
#include "plap/potential.hpp"
#include "plap/quadrature.hpp"
#include "support.hpp"

using namespace plap;
using testsupport::Gen;

TEST_CASE("Allen-Cahn at p = 2 is (1 - u^2)^2 / 4") {
  const auto W = make_allen_cahn(PExponent(2.0));
  Gen g(1);
  for (int k = 0; k < 100; ++k) {
    const double u = g.uniform(-1.0, 1.0);
    CHECK(W.w(u) == doctest::Approx(0.25 * (1 - u * u) * (1 - u * u)).epsilon(1e-13));
    CHECK(W.w_prime(u) == doctest::Approx(-u * (1 - u * u)).epsilon(1e-12));
  }
  CHECK(W.w_zero() == doctest::Approx(0.25));
  CHECK(W.c_zero() == doctest::Approx(1.0));
  CHECK(W.c_one() == doctest::Approx(2.0));
}

TEST_CASE("double-well structure for the built-in potentials") {
  for (double p : {1.1, 1.5, 2.0, 3.0, 10.0}) {
    const PExponent P(p);
    for (const auto& W : {make_allen_cahn(P), make_pendulum(P)}) {
      CHECK(std::abs(W.w(1.0)) < 1e-14);
      CHECK(std::abs(W.w(-1.0)) < 1e-14);
      CHECK(std::abs(W.w_prime(0.0)) < 1e-14);
      CHECK(W.w(0.0) == doctest::Approx(W.w_zero()));
      const PotentialReport r = validate_potential(W);
      CHECK(std::abs(r.ratio_zero - 1.0) < 5e-2);
      CHECK(std::abs(r.ratio_plus_one - 1.0) < 5e-2);
    }
  }
}

TEST_CASE("W' matches a centered difference of W") {
  Gen g(2);
  for (double p : {1.5, 2.0, 3.0}) {
    const PExponent P(p);
    for (const auto& W : {make_allen_cahn(P), make_pendulum(P)}) {
      for (int k = 0; k < 50; ++k) {
        const double u = g.uniform(-0.95, 0.95), h = 1e-6;
        CHECK(std::abs((W.w(u + h) - W.w(u - h)) / (2 * h) - W.w_prime(u)) < 1e-7);
      }
    }
  }
}

TEST_CASE("pendulum W is the integral of phi_p(sin(pi s)) from u to 1") {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto W = make_pendulum(PExponent(p));
    for (int k = 0; k <= 20; ++k) {
      const double u = -1.0 + 0.1 * k;
      auto f = [&](double s) { return phi(std::sin(M_PI * s), p); };
      // split at the kink s = 0 so that every singularity sits at a panel end
      const double ref = u < 0.0 ? testsupport::graded_gl(f, u, 0.0) + testsupport::graded_gl(f, 0.0, 1.0)
                                 : testsupport::graded_gl(f, u, 1.0);
      CHECK(std::abs(W.w(u) - ref) < 1e-12);
    }
  }
  CHECK(make_pendulum(PExponent(2.0)).w_zero() == doctest::Approx(2.0 / M_PI).epsilon(1e-14));
}

TEST_CASE("h_pm inverts W on each branch") {
  Gen g(4);
  for (double p : {1.5, 2.0, 4.0}) {
    const PExponent P(p);
    for (const auto& W : {make_allen_cahn(P), make_pendulum(P)}) {
      for (int k = 0; k < 100; ++k) {
        const double xi = W.w_zero() * g.log_uniform(1e-8, 0.999999);
        const auto [hm, hp] = W.h_pm(xi);
        CHECK(hm < 0.0);
        CHECK(hp > 0.0);
        CHECK(std::abs(W.w(hp) - xi) < 1e-12);
        CHECK(std::abs(W.w(hm) - xi) < 1e-12);
      }
    }
  }
}

TEST_CASE("drop avoids cancellation near u = 0") {
  const auto W = make_allen_cahn(PExponent(2.0));
  const double u = 1e-6;
  // W_0 - W = (2u^2 - u^4) / 4
  CHECK(W.drop(u) == doctest::Approx(0.25 * (2 * u * u - u * u * u * u)).epsilon(1e-10));
}

TEST_CASE("custom potentials are audited") {
  const PExponent P(2.0);
  auto good = make_custom(
      P, "quartic", [](double u) { return 0.25 * (1 - u * u) * (1 - u * u); },
      [](double u) { return -u * (1 - u * u); }, 2.0, 1.0, 2.0, 0.25);
  CHECK_NOTHROW(validate_potential(good));
  // a single-well shape violates W(+-1) = 0
  auto bad = make_custom(
      P, "bowl", [](double u) { return 0.25 * (2.0 - u * u); }, [](double u) { return -0.5 * u; },
      2.0, 1.0, 2.0, 0.5);
  CHECK_THROWS_AS(validate_potential(bad), ValidationError);
  // W' inconsistent with W
  auto off = make_custom(
      P, "off", [](double u) { return 0.25 * (1 - u * u) * (1 - u * u); },
      [](double u) { return -2.0 * u * (1 - u * u); }, 2.0, 1.0, 2.0, 0.25);
  CHECK_THROWS_AS(validate_potential(off), ValidationError);
}
