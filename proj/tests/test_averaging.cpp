#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "zeronoise/averaging.hpp"

using namespace zeronoise;
using doctest::Approx;

TEST_CASE("elliptic integrals") {
  const EllipticPair z = elliptic_ke(0.0);
  CHECK(z.K == Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(z.E == Approx(std::numbers::pi / 2).epsilon(1e-15));
  const EllipticPair h = elliptic_ke(0.5);
  CHECK(h.K == Approx(1.854074677301372).epsilon(1e-13));
  CHECK(h.E == Approx(1.350643881047676).epsilon(1e-13));
  for (double m : {0.1, 0.5, 0.9, 0.999}) {
    const EllipticPair p = elliptic_ke(m);
    CHECK(p.K == Approx(oracle::elliptic_k(m)).epsilon(1e-11));
    CHECK(p.E == Approx(oracle::elliptic_e(m)).epsilon(1e-11));
  }
  CHECK_THROWS_AS(elliptic_ke(1.0), std::invalid_argument);
}

TEST_CASE("elliptic K monotone and log asymptotics") {
  double prevK = 0.0, prevE = 10.0;
  for (int i = 0; i < 100; ++i) {
    const EllipticPair p = elliptic_ke(i / 100.0);
    CHECK(p.K >= std::numbers::pi / 2);
    CHECK(p.E <= std::numbers::pi / 2);
    CHECK(p.E > 0.0);
    CHECK(p.K > prevK);
    CHECK(p.E < prevE);
    prevK = p.K;
    prevE = p.E;
  }
  double prev_gap = 1.0;
  for (double e : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double gap = std::abs(elliptic_ke(1.0 - e).K - 0.5 * std::log(16.0 / e));
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-7);
}

TEST_CASE("Lambda endpoints and small-ratio expansion") {
  CHECK(lambda_fn(0.0) == 0.5);
  CHECK(lambda_fn(1.0) == 1.0);
  for (double e : {1e-2, 1e-3, 1e-4}) {
    CHECK(std::abs(lambda_fn(e) - (0.5 + e / 16 + e * e / 32)) <= 1e-3 * e);
  }
  // next terms of the series: 41/2048 e^3
  CHECK(std::abs(lambda_fn(0.01) - (0.5 + 0.01 / 16 + 1e-4 / 32)) < 2.5e-8);
  // the series branch and the closed form agree where they meet
  CHECK(std::abs(lambda_fn(1.001e-3) - lambda_fn(0.999e-3) - 2e-6 * (1.0 / 16 + 1e-3 / 16)) < 1e-11);
}

TEST_CASE("Lambda is increasing and Lipschitz away from 1") {
  double prev = 0.0, max_slope = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double r = i / 1000.0;
    const double l = lambda_fn(r);
    if (i > 0) {
      CHECK(l > prev);
      if (r <= 0.99) max_slope = std::max(max_slope, (l - prev) * 1000.0);
    }
    prev = l;
  }
  CHECK(max_slope < 5.0);
}

TEST_CASE("Lambda near 1") {
  // |Lambda(1 - e) - (1 - 2/|ln e|)| |ln e| decreases toward 0
  double prev = 1e9;
  for (double e : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    const double L = std::abs(std::log(e));
    const double d = std::abs(lambda_fn(1.0 - e) - (1.0 - 2.0 / L)) * L;
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("Lambda against independent oracles") {
  CHECK(lambda_fn(0.5) == Approx(0.54305).epsilon(1e-5));
  for (int i = 1; i <= 9; ++i) {
    const double r = i / 10.0;
    CHECK(std::abs(lambda_fn(r) - oracle::lambda_ode(r)) <= 1e-6);
    CHECK(std::abs(lambda_fn(r) - oracle::lambda_quadrature(r)) <= 1e-12);
  }
}

TEST_CASE("Gamma") {
  CHECK(gamma_fn(3.0, 3.0) == 3.0);
  CHECK(gamma_fn(2.0, 1.0) == Approx(oracle::lambda_ode(0.5)).epsilon(1e-9));
  CHECK(gamma_fn(5.0, 0.0) == 0.0);
  for (double u : {0.1, 0.7, 2.0, 9.0})
    for (double v : {0.05, 0.7, 3.0}) {
      CHECK(gamma_fn(u, v) == gamma_fn(v, u));
      CHECK(gamma_fn(u, v) >= 0.0);
      CHECK(gamma_fn(u, v) <= std::min(u, v));
    }
}

TEST_CASE("F and G") {
  CHECK(f_fn(2.0, 2.0) == 0.0);
  const double lam_half = oracle::lambda_ode(0.5);
  CHECK(f_fn(3.0, 1.0) == Approx(1.0 - lam_half).epsilon(1e-9));
  CHECK(f_fn(3.0, 1.0) == Approx(0.45695).epsilon(1e-5));
  CHECK(f_fn(3.0, 1.0) == f_floor());
  const double lam_third = oracle::lambda_quadrature(1.0 / 3.0);
  CHECK(g_fn(3.0, 1.0) == Approx((1.0 - lam_third) / (1.0 - lam_half)).epsilon(1e-9));
  CHECK(g_fn(1.0, 0.8) == 1.0);
  CHECK(f_fn(1.0, 0.8) == Approx(1.0 - lambda_fn(0.8)));
  CHECK_THROWS_AS(f_fn(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("K_r normalisation") {
  for (int i = 1; i <= 9; ++i) {
    const double r = i / 10.0;
    CHECK(1.0 / k_norm(r) == Approx(oracle::kr_inverse(r)).epsilon(1e-10));
    const double q = std::pow(r, 0.25);
    CHECK(1.0 / k_norm(r) >= 4.0 / q * std::atanh(q));
  }
  CHECK(1.0 / k_norm(1e-9) == Approx(2.0 * std::numbers::pi).epsilon(1e-8));
  // K_r |ln(1 - r)| creeps toward 1/2 only logarithmically
  const double e = 1e-6;
  CHECK(k_norm(1.0 - e) * std::abs(std::log(e)) == Approx(0.4164).epsilon(1e-3));
}

TEST_CASE("averaged coefficients") {
  const AveragedCoefficients c = averaged_coefficients(2.0, 1.0);
  CHECK(c.gamma == Approx(gamma_fn(2.0, 1.0)));
  CHECK(c.x2 == Approx(0.5 * (2.0 - c.gamma)));
  CHECK(c.y2 == Approx(0.5 * (1.0 - c.gamma)));
  CHECK(c.f == Approx(f_fn(2.0, 1.0)));
  CHECK(c.g_uv == 1.0);
}

TEST_CASE("orbit_average") {
  const Observable z2 = [](const State3& s) { return s.z * s.z; };
  const Observable x2 = [](const State3& s) { return s.x * s.x; };
  const Observable one = [](const State3&) { return 1.0; };
  for (auto [u, v] : {std::pair{2.0, 1.0}, std::pair{0.3, 1.7}, std::pair{1.0, 0.999}}) {
    for (int sign : {1, -1}) {
      CHECK(std::abs(orbit_average(z2, u, v, sign) - gamma_fn(u, v)) < 1e-8);
      CHECK(orbit_average(one, u, v, sign) == Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(orbit_average(x2, 2.0, 1.0, 1) == Approx(0.5 * (2.0 - gamma_fn(2.0, 1.0))).epsilon(1e-10));
  CHECK(orbit_average(z2, 2.0, 2.0, 1) == Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(orbit_average(z2, 2.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("orbit_average agrees with long-time flow averages") {
  const double u = 2.0, v = 0.5;
  const double tau = period(u, v);
  const Trajectory tr = flow(orbit_point(u, v, 1, 0.0), 50.0 * tau, 1e-3);
  const std::vector<std::pair<const char*, Observable>> obs{
      {"x2", [](const State3& s) { return s.x * s.x; }},
      {"y2", [](const State3& s) { return s.y * s.y; }},
      {"z2", [](const State3& s) { return s.z * s.z; }},
      {"x4", [](const State3& s) { return std::pow(s.x, 4); }},
  };
  for (const auto& [name, f] : obs) {
    double acc = 0.0;
    for (std::size_t i = 1; i < tr.size(); ++i)
      acc += 0.5 * (f(tr.states[i]) + f(tr.states[i - 1])) * (tr.times[i] - tr.times[i - 1]);
    INFO(name);
    CHECK(std::abs(acc / tr.times.back() - orbit_average(f, u, v, 1)) < 1e-4);
  }
}

TEST_CASE("nu_average") {
  const Observable x = [](const State3& s) { return s.x; };
  const Observable z2 = [](const State3& s) { return s.z * s.z; };
  const Observable rho = [](const State3& s) {
    const ConservedPair c = phi(s);
    return std::exp(-c.u) * c.v;
  };
  for (auto [u, v] : {std::pair{2.0, 1.0}, std::pair{0.5, 3.0}}) {
    CHECK(std::abs(nu_average(x, u, v)) < 1e-12);
    CHECK(nu_average(z2, u, v) == Approx(gamma_fn(u, v)).epsilon(1e-9));
    CHECK(nu_average(rho, u, v) == Approx(std::exp(-u) * v).epsilon(1e-9));
  }
  // axis: equal-weight average of the fixed points
  CHECK(nu_average(x, 2.0, 0.0) == Approx(0.0));
  const Observable x2 = [](const State3& s) { return s.x * s.x; };
  CHECK(nu_average(x2, 2.0, 0.0) == Approx(1.0));
}

TEST_CASE("near-diagonal expansion") {
  const Observable z2 = [](const State3& s) { return s.z * s.z; };
  CHECK(near_diagonal_expansion(z2, 1.7, ExpansionOrder::Leading) == Approx(1.7));
  const double e = 1e-4;
  CHECK(std::abs(nu_average(z2, 1.0, 1.0 - e) - (1.0 - e)) < 2.0 / std::abs(std::log(e)));

  const Observable one_minus_z2 = [](const State3& s) { return 1.0 - s.z * s.z; };
  CHECK(near_diagonal_expansion(one_minus_z2, 1.0, ExpansionOrder::Log) == Approx(4.0).epsilon(1e-10));
  // away from u = 1 the integrand no longer vanishes at the poles
  CHECK_THROWS_AS(near_diagonal_expansion(one_minus_z2, 2.0, ExpansionOrder::Log), DivergentIntegral);
  // u - z^2 vanishes at the poles of every level set: C_u = 4u
  const double u = 2.5;
  const Observable u_minus_z2 = [u](const State3& s) { return u - s.z * s.z; };
  CHECK(near_diagonal_expansion(u_minus_z2, u, ExpansionOrder::Log) == Approx(4.0 * u).epsilon(1e-10));
}
