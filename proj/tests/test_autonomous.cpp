#include <doctest.h>

#include "plap/autonomous.hpp"
#include "plap/errors.hpp"
#include "support.hpp"

using namespace plap;
using testsupport::Gen;

namespace {

// K for p = 2 Allen-Cahn: int_{-alpha}^{alpha} sqrt(2 (W - xi)) dv / T
double allen_cahn_kinetic(double xi) {
  const double alpha = std::sqrt(1.0 - 2.0 * std::sqrt(xi));
  auto f = [&](double v) {
    const double d = 0.25 * (1 - v * v) * (1 - v * v) - xi;
    return d > 0.0 ? std::sqrt(2.0 * d) : 0.0;
  };
  return testsupport::graded_gl(f, -alpha, alpha) / testsupport::allen_cahn_period(xi);
}

}  // namespace

TEST_CASE("p = 2 Allen-Cahn period against the elliptic-integral closed form") {
  const auto W = make_allen_cahn(PExponent(2.0));
  Gen g(1);
  for (int k = 0; k < 40; ++k) {
    const double xi = 0.25 * g.log_uniform(1e-9, 0.999);
    CHECK(time_map(xi, 1.0, W) == doctest::Approx(testsupport::allen_cahn_period(xi)).epsilon(1e-10));
  }
}

TEST_CASE("p = 2 Allen-Cahn averaged kinetic energy against direct quadrature") {
  const auto W = make_allen_cahn(PExponent(2.0));
  Gen g(2);
  for (int k = 0; k < 20; ++k) {
    const double xi = 0.25 * g.uniform(0.01, 0.99);
    CHECK(kinetic_avg(xi, 1.0, W) == doctest::Approx(allen_cahn_kinetic(xi)).epsilon(1e-9));
  }
}

TEST_CASE("period tends to 2 pi_p / C_0^{1/p} at the top of the well") {
  for (double p : {1.5, 2.0, 3.0, 6.0}) {
    const PExponent P(p);
    for (const auto& W : {make_allen_cahn(P), make_pendulum(P)}) {
      const double lim = 2.0 * P.pi_p() / std::pow(W.c_zero(), 1.0 / p);
      // the first correction is relative O(u^p) for Allen-Cahn and O(u^2) for
      // the pendulum, with amplitude u ~ gap^{1/p}
      const double gap = 1e-9, rate = W.name() == "pendulum" ? std::pow(gap, 2.0 / p) : gap;
      CHECK(std::abs(time_map(W.w_zero() * (1 - gap), 1.0, W) - lim) < 10.0 * rate * lim);
    }
  }
}

TEST_CASE("period grows like log(1/xi) near the heteroclinic level") {
  // p = 2 Allen-Cahn: T = sqrt(2) log(1/xi) + 4 sqrt(2) log 2 + o(1)
  const auto W = make_allen_cahn(PExponent(2.0));
  for (double xi : {1e-8, 1e-10, 1e-12}) {
    const double asym = std::sqrt(2.0) * std::log(1.0 / xi) + 4.0 * std::sqrt(2.0) * std::log(2.0);
    CHECK(std::abs(time_map(xi, 1.0, W) - asym) < 1e-2);
  }
}

TEST_CASE("scaling in the weight: T_a = a^{-1/p} T_1, K_a = a K_1") {
  Gen g(3);
  for (int k = 0; k < 30; ++k) {
    const PExponent P(g.uniform(1.2, 5.0));
    const auto W = g.integer(0, 1) ? make_allen_cahn(P) : make_pendulum(P);
    const double a = g.log_uniform(0.1, 10.0), xi = W.w_zero() * g.uniform(0.01, 0.99);
    const auto [T1, K1] = time_and_kinetic(xi, 1.0, W);
    const auto [Ta, Ka] = time_and_kinetic(xi, a, W);
    CHECK(Ta == doctest::Approx(std::pow(a, -1.0 / P.p()) * T1).epsilon(1e-10));
    CHECK(Ka == doctest::Approx(a * K1).epsilon(1e-10));
  }
}

TEST_CASE("half times add up to the period and agree for even potentials") {
  const auto W = make_allen_cahn(PExponent(3.0));
  const double xi = 0.05;
  const double hp = half_time(xi, 1.0, W, 1), hm = half_time(xi, 1.0, W, -1);
  CHECK(hp == doctest::Approx(hm).epsilon(1e-12));
  CHECK(hp + hm == doctest::Approx(time_map(xi, 1.0, W)).epsilon(1e-12));
  CHECK_THROWS_AS(time_map(0.0, 1.0, W), DomainError);
  CHECK_THROWS_AS(time_map(W.w_zero(), 1.0, W), DomainError);
}

TEST_CASE("table interpolation, G and its inverse") {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto W = make_allen_cahn(PExponent(p));
    const TimeMapTable tab(W, 1.0);
    Gen g(4);
    double prev = 0.0;
    for (int k = 1; k < 50; ++k) {
      const double xi = W.w_zero() * k / 50.0;
      const double G = tab.G(xi);
      CHECK(G > prev);
      prev = G;
    }
    for (int k = 0; k < 30; ++k) {
      const double xi = W.w_zero() * g.uniform(1e-6, 1 - 1e-6);
      const auto [T, K] = time_and_kinetic(xi, 1.0, W);
      CHECK(tab.T(xi) == doctest::Approx(T).epsilon(1e-7));
      CHECK(tab.K(xi) == doctest::Approx(K).epsilon(1e-7));
      CHECK(tab.G_inv(tab.G(xi)) == doctest::Approx(xi).epsilon(1e-10));
      // dG/dxi = 1/K
      const double h = 1e-6 * std::min(xi, W.w_zero() - xi);
      CHECK((tab.G(xi + h) - tab.G(xi - h)) / (2 * h) == doctest::Approx(1.0 / K).epsilon(1e-5));
    }
    CHECK(tab.K(0.0) == 0.0);
    CHECK(tab.K(W.w_zero()) == 0.0);
    CHECK_THROWS_AS(tab.G(W.w_zero()), DomainError);
  }
}

TEST_CASE("K near the bottom behaves like (W_0 - xi)/p*") {
  for (double p : {1.5, 2.0, 3.0}) {
    const PExponent P(p);
    const auto W = make_allen_cahn(P);
    const double gap = 1e-6 * W.w_zero();
    CHECK(kinetic_avg(W.w_zero() - gap, 1.0, W) / (gap / P.p_star()) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("heteroclinic orbit: tanh profile and action for p = 2") {
  const auto W = make_allen_cahn(PExponent(2.0));
  const Heteroclinic h = heteroclinic_orbit(1.0, W, 5.0, 0.01);
  double err = 0.0;
  for (Eigen::Index i = 0; i < h.x_grid.size(); ++i)
    err = std::max(err, std::abs(h.v_values[i] - std::tanh(h.x_grid[i] / std::sqrt(2.0))));
  CHECK(err < 1e-8);
  CHECK(heteroclinic_action(1.0, W) == doctest::Approx(std::sqrt(2.0) / 3.0).epsilon(1e-10));
  // weight scaling of the action: a^{1/p*}... checked through v(x) = v_1(a^{1/p} x)
  const Heteroclinic h4 = heteroclinic_orbit(4.0, W, 2.5, 0.005);
  CHECK(std::abs(h4.v_values[h4.x_grid.size() - 1] - std::tanh(2.5 * 2.0 / std::sqrt(2.0))) < 1e-8);
}

TEST_CASE("heteroclinic orbit conserves the zero energy for p != 2") {
  for (double p : {1.5, 3.0}) {
    const PExponent P(p);
    const auto W = make_allen_cahn(P);
    const Heteroclinic h = heteroclinic_orbit(1.0, W, 4.0, 0.01);
    for (Eigen::Index i = 0; i < h.x_grid.size(); i += 10) {
      const PhasePoint z{h.v_values[i], phi(h.vprime_values[i], p)};
      CHECK(std::abs(energy(z, 1.0, W)) < 1e-8);
    }
    for (Eigen::Index i = 1; i < h.x_grid.size(); ++i) CHECK(h.v_values[i] > h.v_values[i - 1]);
  }
}

TEST_CASE("boundary pair threshold and arches") {
  const auto W = make_allen_cahn(PExponent(2.0));
  // linearization v'' = -v at v = 0: arches exist once 2M > pi
  CHECK(boundary_pair_threshold(1.0, W) == doctest::Approx(M_PI / 2.0).epsilon(1e-6));
  const BoundaryPair bp = boundary_pair(5.0, 1.0, W);
  CHECK(bp.v_plus0 > 0.99);
  CHECK(bp.v_minus0 < -0.99);
  const Eigen::Index n = bp.x_grid.size();
  CHECK(std::abs(bp.v_plus[0]) < 1e-10);
  CHECK(std::abs(bp.v_plus[n - 1]) < 1e-10);
  CHECK(bp.v_plus0 == doctest::Approx(-bp.v_minus0).epsilon(1e-10));
}

TEST_CASE("G diverges logarithmically at the bottom of the well") {
  // K ~ (W_0 - xi)/p* there, so each decade of W_0 - xi adds p* log 10
  for (double p : {1.5, 2.0, 3.0}) {
    const PExponent P(p);
    const auto W = make_allen_cahn(P);
    const TimeMapTable tab(W, 1.0);
    const double W0 = W.w_zero();
    double prev = tab.G(W0 - 1e-3 * W0);
    for (double d = 1e-4; d >= 1e-9; d /= 10) {
      const double g = tab.G(W0 - d * W0);
      CHECK(g - prev == doctest::Approx(P.p_star() * std::log(10.0)).epsilon(2e-2));
      prev = g;
    }
  }
}
