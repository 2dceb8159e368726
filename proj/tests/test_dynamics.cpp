#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "zeronoise/dynamics.hpp"

using namespace zeronoise;
using doctest::Approx;

namespace {

double max_dev(const State3& a, const State3& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

}  // namespace

TEST_CASE("bilinear form on simple inputs") {
  CHECK(bilinear({1, 1, 1}, {1, 1, 1}) == State3{1, 1, -2});
  CHECK(bilinear({0, 0, 5}, {0, 0, 5}) == State3{0, 0, 0});
  const State3 xi{1, 2, 3};
  CHECK(dot(bilinear(xi, xi), xi) == 0.0);
  CHECK(bilinear(xi, xi) == vector_field(xi));
}

TEST_CASE("bilinear is symmetric") {
  const State3 a{0.3, -1.2, 2.0}, b{1.5, 0.25, -0.75};
  const State3 ab = bilinear(a, b), ba = bilinear(b, a);
  CHECK(max_dev(ab, ba) < 1e-15);
}

TEST_CASE("orthogonality on random states") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), logscale(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double s = std::pow(10.0, logscale(gen));
    const State3 xi{s * unit(gen), s * unit(gen), s * unit(gen)};
    CHECK(std::abs(dot(vector_field(xi), xi)) <= 1e-12 * std::pow(norm(xi), 3));
  }
}

TEST_CASE("phi examples") {
  CHECK(phi({1, 1, 1}) == ConservedPair{3, 3});
  CHECK(phi({1, 0, 0}) == ConservedPair{2, 0});
  CHECK(phi({0, 0, 2}) == ConservedPair{4, 4});
}

TEST_CASE("sn") {
  CHECK(sn({2, 1, 0}) == 1);
  CHECK(sn({-1, -2, 0}) == -1);
  CHECK(sn({1, 1, 0}) == 0);
  CHECK(sn({-1, 1, 7}) == 0);
}

TEST_CASE("classify") {
  const OrbitClass a = classify({1, 0.5, 0});
  CHECK(a.kind == OrbitKind::PeriodicPlus);
  CHECK(a.pair.u == Approx(2.0));
  CHECK(a.pair.v == Approx(0.5));
  CHECK(classify({-1, 0.5, 0}).kind == OrbitKind::PeriodicMinus);
  CHECK(classify({0, 0, 3}).kind == OrbitKind::FixedPointLine);
  const OrbitClass h = classify({1, 1, 0});
  CHECK(h.kind == OrbitKind::Heteroclinic);
  CHECK(h.pair.u == 2.0);
  CHECK(h.pair.v == 2.0);
}

TEST_CASE("flow from a fixed point is constant") {
  const Trajectory tr = flow({0, 0, 3}, 5.0, 1e-2);
  for (const State3& s : tr.states) CHECK(s == State3{0, 0, 3});
  CHECK(tr.times.back() == Approx(5.0).epsilon(1e-15));
}

TEST_CASE("flow rejects bad input") {
  CHECK_THROWS_AS(flow({NAN, 0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(flow({1, 0, 0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(flow({1, 0, 0}, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("flow returns to its start after one period") {
  const State3 xi0{1, 0.5, 0};
  const double tau = period(2.0, 0.5);
  const Trajectory tr = flow(xi0, tau, 1e-3);
  CHECK(tr.times.back() == Approx(tau).epsilon(1e-14));
  CHECK(max_dev(tr.states.back(), xi0) < 1e-6);
}

TEST_CASE("flow conserves phi over long horizons") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 5; ++i) {
    const State3 xi0{d(gen), d(gen), d(gen)};
    const ConservedPair ref = phi(xi0);
    const Trajectory tr = flow(xi0, 100.0, 1e-3, 100);
    for (const State3& s : tr.states) {
      const ConservedPair c = phi(s);
      CHECK(std::abs(c.u - ref.u) <= 1e-8 * ref.u);
      CHECK(std::abs(c.v - ref.v) <= 1e-8 * ref.v);
    }
  }
}

TEST_CASE("flow commutes with both symmetries") {
  const State3 xi0{0.7, -1.1, 0.4};
  const Trajectory a = flow(xi0, 10.0);
  const Trajectory e = flow(apply_sym_e(xi0), 10.0);
  const Trajectory pm = flow(apply_sym_pm(xi0), 10.0);
  double de = 0.0, dpm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    de = std::max(de, max_dev(apply_sym_e(a.states[i]), e.states[i]));
    dpm = std::max(dpm, max_dev(apply_sym_pm(a.states[i]), pm.states[i]));
  }
  CHECK(de <= 1e-8);
  CHECK(dpm <= 1e-8);
}

TEST_CASE("period against the ODE return-time oracle") {
  const double ref = oracle::zmax_return(2.0, 0.5).period;
  CHECK(std::abs(period(2.0, 0.5) - ref) <= 1e-6 * ref);
  CHECK(period(2.0, 0.5) == Approx(4.768022029102).epsilon(1e-11));
  for (auto [u, v] : {std::pair{1.0, 3.0}, std::pair{0.4, 0.1}, std::pair{5.0, 4.5}}) {
    const double r = oracle::zmax_return(u, v).period;
    CHECK(std::abs(period(u, v) - r) <= 1e-6 * r);
  }
}

TEST_CASE("period near the axis matches the linearised frequency") {
  // small v: the orbit is a small loop around (sqrt(u/2), 0, 0) with
  // angular frequency sqrt(u)
  CHECK(period(1.0, 1e-10) == Approx(2.0 * std::numbers::pi).epsilon(1e-9));
  CHECK(period(4.0, 1e-10) == Approx(std::numbers::pi).epsilon(1e-9));
  CHECK(period(1e-10, 9.0) == Approx(2.0 * std::numbers::pi / 3.0).epsilon(1e-9));
}

TEST_CASE("period on the diagonal is infinite") {
  CHECK(std::isinf(period(1.0, 1.0)));
  CHECK(std::isinf(period(2.0, 2.0 * (1.0 - 1e-13))));
  CHECK_THROWS_AS(period(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("orbit_point geometry") {
  const double u = 2.0, v = 0.5;
  const State3 p0 = orbit_point(u, v, 1, 0.0);
  CHECK(p0.x == Approx(std::sqrt(u / 2)));
  CHECK(p0.y == Approx(std::sqrt(v / 2)));
  CHECK(p0.z == Approx(0.0));
  const State3 p1 = orbit_point(u, v, 1, std::numbers::pi / 2);
  CHECK(p1.x == Approx(std::sqrt((u - v) / 2)));
  CHECK(std::abs(p1.y) < 1e-12);
  CHECK(p1.z == Approx(std::sqrt(v)));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> th(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < 100; ++i) {
    const double t = th(gen);
    for (int sign : {1, -1}) {
      const State3 p = orbit_point(u, v, sign, t);
      const ConservedPair c = phi(p);
      CHECK(c.u == Approx(u).epsilon(1e-14));
      CHECK(c.v == Approx(v).epsilon(1e-14));
      if (sn(p) != 0) CHECK(sn(p) == sign);
    }
  }
  CHECK_THROWS_AS(orbit_point(1.0, 1.0, 1, 0.0), std::invalid_argument);
}

TEST_CASE("symmetries") {
  CHECK(apply_sym_e({1, 2, 3}) == State3{2, 1, 3});
  CHECK(apply_sym_pm({1, 2, 3}) == State3{-1, -2, 3});
  const State3 xi{0.1, -4, 2};
  CHECK(apply_sym_pm(apply_sym_pm(xi)) == xi);
  CHECK(apply_sym_e(apply_sym_e(xi)) == xi);
}

TEST_CASE("projection restores the level set") {
  const ConservedPair target{2.0, 0.5};
  const State3 off{1.001, 0.499, 0.002};
  const State3 back = project_to_level(off, target);
  const ConservedPair c = phi(back);
  CHECK(std::abs(c.u - 2.0) < 1e-5);
  CHECK(std::abs(c.v - 0.5) < 1e-5);
  // on the fixed-point line the step is skipped
  CHECK(project_to_level({0, 0, 1}, {1.1, 1.1}) == State3{0, 0, 1});
}
