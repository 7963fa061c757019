#include <doctest.h>

#include "plap/errors.hpp"
#include "plap/ptrig.hpp"
#include "plap/quadrature.hpp"
#include "support.hpp"

using namespace plap;
using testsupport::Gen;

TEST_CASE("pi_p at p = 2 is pi") { CHECK(compute_pi_p(2.0) == doctest::Approx(M_PI).epsilon(1e-14)); }

TEST_CASE("pi_p agrees with a substituted Gauss-Legendre rule and the closed form") {
  for (double p : {1.1, 1.5, 2.0, 3.0, 5.0, 10.0}) {
    const double v = compute_pi_p(p);
    CHECK(std::abs(v - testsupport::pi_p_substituted(p)) < 1e-10);
    CHECK(std::abs(v - testsupport::pi_p_closed(p)) < 1e-12);
  }
}

TEST_CASE("pi_p from tanh-sinh on the unsubstituted integrand") {
  for (double p : {1.5, 2.0, 3.0, 5.0}) {
    // 1 - s^p evaluated from the distance to the singular end
    auto f = [p](double, double, double d) { return std::pow(-std::expm1(p * std::log1p(-d)), -1.0 / p); };
    const QuadResult r = tanh_sinh(f, 0.0, 1.0, 1e-14);
    CHECK(r.converged);
    CHECK(std::abs(2.0 * std::pow(p - 1.0, 1.0 / p) * r.value - compute_pi_p(p)) < 1e-10);
  }
}

TEST_CASE("pi_p is symmetric under p <-> p*") {
  Gen g(11);
  for (int k = 0; k < 20; ++k) {
    const double p = g.uniform(1.2, 6.0);
    const double q = p / (p - 1.0);
    if (q > 10.0) continue;
    CHECK(std::abs(compute_pi_p(p) - compute_pi_p(q)) < 1e-12);
  }
}

TEST_CASE("PExponent derived constants") {
  const PExponent P(3.0);
  CHECK(P.p_star() == doctest::Approx(1.5));
  CHECK(P.gamma_p() == 1.0);
  CHECK(PExponent(1.5).gamma_p() == doctest::Approx(2.0));
  CHECK_THROWS_AS(PExponent(1.0), DomainError);
  CHECK_THROWS_AS(PExponent(0.5), DomainError);
  CHECK_THROWS_AS(PExponent(12.0), DomainError);
}

TEST_CASE("phi_p and its inverse") {
  Gen g(3);
  for (int k = 0; k < 200; ++k) {
    const PExponent P(g.uniform(1.1, 10.0));
    const double s = g.uniform(-5.0, 5.0);
    CHECK(phi_p_inv(phi_p(s, P), P) == doctest::Approx(s).epsilon(1e-12));
    CHECK(phi_p(-s, P) == doctest::Approx(-phi_p(s, P)));
  }
  CHECK(phi(0.0, 1.5) == 0.0);
}

TEST_CASE("p = 2 reduces to cos and sin") {
  const PTrig T(2.0);
  Gen g(5);
  for (int k = 0; k < 100; ++k) {
    const double th = g.uniform(-20.0, 20.0);
    CHECK(std::abs(T.cos(th) - std::cos(th)) < 1e-12);
    CHECK(std::abs(T.sin(th) - std::sin(th)) < 1e-12);
  }
}

TEST_CASE("p-circle identity, quarter values and angle inversion") {
  Gen g(7);
  for (double p : {1.1, 1.5, 3.0, 5.0, 10.0}) {
    const PTrig& T = *PTrig::get(p);
    const double q = p / (p - 1.0);
    CHECK(T.cos(0.0) == doctest::Approx(1.0));
    CHECK(std::abs(T.cos(T.pi_p() / 2.0)) < 1e-12);
    CHECK(T.cos(T.pi_p()) == doctest::Approx(-1.0));
    CHECK(T.seam_mismatch() < 1e-12);
    for (int k = 0; k < 100; ++k) {
      const double th = g.uniform(-3.0 * T.pi_p(), 3.0 * T.pi_p());
      const auto [c, s] = T.cs(th);
      CHECK(std::abs(std::pow(std::abs(c), p) / p + std::pow(std::abs(s), q) / q - 1.0 / p) < 1e-13);
      double r = std::fmod(th, 2.0 * T.pi_p());
      if (r < 0.0) r += 2.0 * T.pi_p();
      double d = std::abs(T.angle(c, s) - r);
      d = std::min(d, 2.0 * T.pi_p() - d);
      CHECK(d < 1e-10);
    }
  }
}

TEST_CASE("p-trig derivative relations") {
  // C' = -phi_{p*}(S), S' = phi_p(C), checked with centered differences
  Gen g(9);
  for (double p : {1.5, 3.0}) {
    const PTrig T(p);
    const double q = p / (p - 1.0);
    for (int k = 0; k < 30; ++k) {
      const double th = g.uniform(0.0, 2.0 * T.pi_p()), h = 1e-5;
      const double dc = (T.cos(th + h) - T.cos(th - h)) / (2.0 * h);
      const double ds = (T.sin(th + h) - T.sin(th - h)) / (2.0 * h);
      CHECK(std::abs(dc + phi(T.sin(th), q)) < 1e-6);
      CHECK(std::abs(ds - phi(T.cos(th), p)) < 1e-6);
    }
  }
}
