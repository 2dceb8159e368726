#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "zeronoise/averaging.hpp"
#include "zeronoise/ensemble.hpp"
#include "zeronoise/measure.hpp"
#include "zeronoise/sde.hpp"

using namespace zeronoise;
using doctest::Approx;

namespace {

double max_dev(const State3& a, const State3& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("noise parameter validation") {
  CHECK_THROWS_AS(validate_noise({0.0, 1.0, 0.1}, false), std::invalid_argument);
  CHECK_THROWS_AS(validate_noise({1.0, -1.0, 0.1}, false), std::invalid_argument);
  CHECK_THROWS_AS(validate_noise({1.0, 1.0, 0.0}, true), std::invalid_argument);
  CHECK_NOTHROW(validate_noise({1.0, 1.0, 0.0}, false));
  CHECK_THROWS_AS(simulate_full({1, 0, 0}, {1, 1, 0.1}, -1.0, 1e-3, {}), std::invalid_argument);
}

TEST_CASE("switching the noise off recovers the deterministic flow") {
  SdeOptions opts;
  opts.diffusion_scale = 0.0;
  opts.scheme = Scheme::Splitting;
  const State3 xi0{1.0, 2.0, 0.5};
  const Trajectory sde = simulate_full(xi0, {1, 1, 0.0}, 3.0, 1e-3, {1, 0}, opts);
  const Trajectory det = flow(xi0, 3.0, 1e-3);
  CHECK(max_dev(sde.states.back(), det.states.back()) < 1e-8);

  opts.scheme = Scheme::EulerMaruyama;
  const Trajectory em = simulate_full(xi0, {1, 1, 0.0}, 3.0, 1e-5, {1, 0}, opts);
  CHECK(max_dev(em.states.back(), det.states.back()) < 1e-3);
}

TEST_CASE("identical seed and stream reproduce the path bit for bit") {
  for (Scheme s : {Scheme::EulerMaruyama, Scheme::Splitting}) {
    SdeOptions opts;
    opts.scheme = s;
    const Trajectory a = simulate_full({1, 0.5, 0.2}, {1, 1.5, 0.1}, 2.0, 1e-3, {77, 5}, opts);
    const Trajectory b = simulate_full({1, 0.5, 0.2}, {1, 1.5, 0.1}, 2.0, 1e-3, {77, 5}, opts);
    CHECK(a.states == b.states);
    CHECK(a.times == b.times);
    const Trajectory c = simulate_full({1, 0.5, 0.2}, {1, 1.5, 0.1}, 2.0, 1e-3, {77, 6}, opts);
    CHECK(a.states.back() != c.states.back());
  }
}

TEST_CASE("trajectory bookkeeping") {
  SdeOptions opts;
  opts.record_every = 7;
  const Trajectory tr = simulate_full({1, 0, 0}, {1, 1, 0.5}, 1.0, 0.01, {3, 0}, opts);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 1.0);
  CHECK(tr.size() == 100 / 7 + 2);
  CHECK(tr.meta.dt == Approx(0.01));
  CHECK(tr.meta.seed == 3u);
  CHECK(tr.meta.stream == 0u);
}

TEST_CASE("fast time is a relabelling of original time") {
  const NoiseParams p{1.0, 0.7, 0.05};
  const State3 xi0{0.8, 0.3, -0.4};
  const Trajectory fast = simulate_fast(xi0, p, 0.5, 1e-3, {4, 2});
  const Trajectory full = simulate_full(xi0, p, 0.5 / p.eps, 1e-3 / p.eps, {4, 2});
  REQUIRE(fast.size() == full.size());
  for (std::size_t i = 0; i < fast.size(); i += 50) {
    CHECK(full.times[i] == Approx(fast.times[i] / p.eps));
    CHECK(max_dev(fast.states[i], full.states[i]) < 1e-10);
  }
}

TEST_CASE("eps = 1: fast and original systems coincide") {
  const NoiseParams p{1.0, 1.0, 1.0};
  const Trajectory a = simulate_fast({1, 1, 1}, p, 1.0, 1e-2, {5, 0});
  const Trajectory b = simulate_full({1, 1, 1}, p, 1.0, 1e-2, {5, 0});
  CHECK(a.states == b.states);
}

TEST_CASE("blow-up guard") {
  // explicit Euler in fast time with a huge step gains energy quickly
  SdeOptions opts;
  opts.scheme = Scheme::EulerMaruyama;
  CHECK_THROWS_AS(simulate_fast({5, 4, 3}, {1, 1, 1e-4}, 10.0, 1e-2, {1, 0}, opts), SimulationError);
}

TEST_CASE("uv_from") {
  const Trajectory det = flow({1, 0.5, 0.3}, 5.0);
  const UVTrajectory uv = uv_from(det);
  for (std::size_t i = 0; i < uv.size(); ++i) {
    CHECK(uv.u[i] == Approx(uv.u[0]).epsilon(1e-10));
    CHECK(uv.v[i] == Approx(uv.v[0]).epsilon(1e-10));
  }
  const Trajectory tr = simulate_full({1, 0.5, 0.3}, {1, 1, 0.5}, 5.0, 1e-3, {8, 0});
  const UVTrajectory w = uv_from(tr);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w.u[i] >= 0.0);
    CHECK(w.v[i] >= 0.0);
    const State3& s = tr.states[i];
    CHECK(w.u[i] - w.v[i] == Approx(2.0 * (s.x * s.x - s.y * s.y)).epsilon(1e-12));
  }
}

TEST_CASE("second moment of the fast system relaxes to |sigma|^2 / 2") {
  const NoiseParams p{1.0, 1.0, 0.1};
  const std::size_t n = 400;
  std::vector<double> m2(n);
  SdeOptions opts;
  opts.scheme = Scheme::Splitting;
  opts.record_every = 1000000;
  parallel_for(n, [&](std::size_t i) {
    const Trajectory tr = simulate_fast({1, 0.5, 0.25}, p, 6.0, 0.01, {31, i}, opts);
    m2[i] = norm2(tr.states.back());
  });
  const MeanSe e = sample_mean(m2);
  CHECK(std::abs(e.mean - 1.0) < 4.0 * e.se);
}

TEST_CASE("drift of U in fast time matches 2 sigma1^2 - 2 U") {
  const NoiseParams p{1.2, 0.8, 0.01};
  const std::size_t n = 4000;
  const double t = 0.2, h = 0.05;
  std::vector<double> u_t(n), incr(n);
  SdeOptions opts;
  opts.scheme = Scheme::Splitting;
  opts.record_every = 50;
  parallel_for(n, [&](std::size_t i) {
    const Trajectory tr = simulate_fast({1, 0.5, 0.25}, p, t + h, 1e-3, {41, i}, opts);
    const UVTrajectory uv = uv_from(tr);
    // samples at 0, 0.05, ..., 0.25
    u_t[i] = uv.u[4];
    incr[i] = (uv.u[5] - uv.u[4]) / h;
  });
  const MeanSe d = sample_mean(incr);
  const double predicted = 2.0 * p.sigma1 * p.sigma1 - 2.0 * mean(u_t);
  // O(h) bias from the finite difference: |m''| h / 2 with m'' = -2 m'
  CHECK(std::abs(d.mean - predicted) < 4.0 * d.se + h * std::abs(predicted) + 0.02);
}

TEST_CASE("limit (U, V): drift-only path relaxes at rate 2") {
  SdeOptions opts;
  opts.diffusion_scale = 0.0;
  const NoiseParams p{1.5, 0.5, 0.0};
  const UVTrajectory tr = simulate_limit_uv(0.2, 2.0, p, 1.0, 1e-4, {1, 0}, opts);
  CHECK(tr.u.back() == Approx(2.25 + (0.2 - 2.25) * std::exp(-2.0)).epsilon(1e-3));
  CHECK(tr.v.back() == Approx(0.25 + (2.0 - 0.25) * std::exp(-2.0)).epsilon(1e-3));
}

TEST_CASE("limit (U, V): stationary means") {
  const NoiseParams p{1.0, 1.3, 0.0};
  const std::size_t n = 4000;
  std::vector<double> us(n), vs(n);
  SdeOptions opts;
  opts.record_every = 100000;
  parallel_for(n, [&](std::size_t i) {
    const UVTrajectory tr = simulate_limit_uv(1.0, 0.5, p, 10.0, 1e-2, {17, i}, opts);
    us[i] = tr.u.back();
    vs[i] = tr.v.back();
  });
  const MeanSe mu = sample_mean(us), mv = sample_mean(vs);
  CHECK(std::abs(mu.mean - 1.0) < 3.0 * mu.se);
  CHECK(std::abs(mv.mean - 1.69) < 3.0 * mv.se);
}

TEST_CASE("limit (U, V): never negative, degenerate on the diagonal") {
  const UVTrajectory tr = simulate_limit_uv(0.01, 0.02, {0.2, 0.3, 0.0}, 20.0, 1e-2, {2, 0});
  CHECK(*std::min_element(tr.u.begin(), tr.u.end()) >= 0.0);
  CHECK(*std::min_element(tr.v.begin(), tr.v.end()) >= 0.0);
  // Gamma(u, u) = u: zero diffusion and equal drifts keep the scheme on u = v
  const UVTrajectory d = simulate_limit_uv(1.0, 1.0, {1, 1, 0}, 1.0, 1e-3, {2, 0});
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.u[i] == d.v[i]);
}

TEST_CASE("(H, K) below ratio one half is a plain diffusion") {
  CHECK(g_fn(1.0, 0.3) != 1.0);
  CHECK(f_fn(1.0, 0.3) == f_floor());
  CHECK(g_fn(1.0, 0.6) == 1.0);
}

TEST_CASE("(H, K): start on the diagonal is rejected, paths stay nonnegative") {
  CHECK_THROWS_AS(simulate_hk(1.0, 1.0, {1, 1, 0}, 1.0, 1e-3, {}), std::invalid_argument);
  const UVTrajectory tr = simulate_hk(0.05, 0.01, {0.3, 0.3, 0.0}, 20.0, 1e-3, {6, 0});
  CHECK(*std::min_element(tr.u.begin(), tr.u.end()) >= 0.0);
  CHECK(*std::min_element(tr.v.begin(), tr.v.end()) >= 0.0);
}

TEST_CASE("(H, K): bounded second moment and swap symmetry") {
  const std::size_t n = 400;
  const NoiseParams p{1.0, 1.0, 0.0};
  std::vector<double> h_end(n), k_end(n), m2_end(n);
  SdeOptions opts;
  opts.record_every = 100;
  parallel_for(n, [&](std::size_t i) {
    const bool flip = i % 2;
    const UVTrajectory tr = simulate_hk(flip ? 0.5 : 1.0, flip ? 1.0 : 0.5, p, 20.0, 1e-3, {23, i}, opts);
    h_end[i] = tr.u.back();
    k_end[i] = tr.v.back();
    m2_end[i] = h_end[i] * h_end[i] + k_end[i] * k_end[i];
  });
  // about 5.7 once stationary
  CHECK(mean(m2_end) < 10.0);
  CHECK(ks_two_sample(h_end, k_end) < 1.95 * std::sqrt(2.0 / n));
}

TEST_CASE("time change: constant speed below ratio one half") {
  UVTrajectory uv;
  for (int i = 0; i <= 1000; ++i) {
    const double t = i * 1e-3;
    uv.times.push_back(t);
    uv.u.push_back(1.0 + 0.2 * std::sin(3 * t));
    uv.v.push_back(0.2 + 0.1 * std::cos(5 * t));
  }
  const auto [hk, map] = time_change_forward(uv);
  const double c = f_floor();
  CHECK(map.a_values.front() == 0.0);
  CHECK(map.a_values.back() == Approx(c * 1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < hk.size(); i += 97) {
    const double s = hk.times[i] / c;
    CHECK(hk.u[i] == Approx(1.0 + 0.2 * std::sin(3 * s)).epsilon(1e-6));
  }
}

TEST_CASE("time change: forward then inverse is the identity") {
  // smooth path crossing ratio 1/2 in both directions, away from the
  // diagonal where 1/F has a log singularity
  UVTrajectory uv;
  for (int i = 0; i <= 20000; ++i) {
    const double t = i * 2.5e-4;
    uv.times.push_back(t);
    uv.u.push_back(1.0 + 0.3 * std::sin(2 * t));
    uv.v.push_back(0.45 + 0.15 * std::cos(3 * t));
  }
  const auto fwd = time_change_forward(uv).first;
  const auto [back, map] = time_change_inverse(fwd);
  for (std::size_t i = 1; i < map.a_values.size(); ++i) CHECK(map.a_values[i] >= map.a_values[i - 1]);
  double worst = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    const double t = back.times[i];
    worst = std::max(worst, std::abs(back.u[i] - (1.0 + 0.3 * std::sin(2 * t))));
    worst = std::max(worst, std::abs(back.v[i] - (0.45 + 0.15 * std::cos(3 * t))));
  }
  CHECK(worst < 1e-7);
  CHECK(back.times.back() == Approx(5.0).epsilon(1e-8));
}

TEST_CASE("time change: round trip keeps the clock on a rough path") {
  const UVTrajectory uv = simulate_limit_uv(1.0, 0.5, {1.0, 1.4, 0.0}, 5.0, 1e-4, {3, 0});
  const auto back = time_change_inverse(time_change_forward(uv).first).first;
  CHECK(back.times.back() == Approx(5.0).epsilon(1e-3));
}

TEST_CASE("time change on a path stuck on the diagonal") {
  UVTrajectory uv;
  uv.times = {0.0, 1.0, 2.0};
  uv.u = {1.0, 1.0, 1.0};
  uv.v = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(time_change_forward(uv), SimulationError);
}

TEST_CASE("quadratic variation") {
  const std::vector<double> c(101, 3.0);
  CHECK(quadratic_variation(c, 0.02) == Approx(9.0 * 2.0));
  QvAccumulator acc(0.02);
  for (double x : c) acc.push(x);
  CHECK(acc.value() == quadratic_variation(c, 0.02));
  CHECK(acc.elapsed() == Approx(2.0));
}

TEST_CASE("quadratic variation along an orbit is the orbit average of x^2") {
  const double u = 2.0, v = 0.5;
  const double T = 50.0 * period(u, v);
  const double dt = 1e-3;
  const std::size_t n = static_cast<std::size_t>(std::ceil(T / dt));
  const Trajectory tr = flow(orbit_point(u, v, 1, 0.3), T, T / static_cast<double>(n));
  std::vector<double> x;
  for (const State3& s : tr.states) x.push_back(s.x);
  const double avg = quadratic_variation(x, T / static_cast<double>(n)) / T;
  CHECK(std::abs(avg - averaged_coefficients(u, v).x2) < 1e-4);
}
