#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "zeronoise/rng.hpp"

using namespace zeronoise;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("draws are a pure function of seed, stream and index") {
  const CounterRng a({42, 7}), b({42, 7});
  for (std::uint64_t i : {0ull, 1ull, 12345ull, 1ull << 40}) CHECK(a.normals(i) == b.normals(i));
  CHECK(a.block(3) != CounterRng({42, 8}).block(3));
  CHECK(a.block(3) != CounterRng({43, 7}).block(3));
  CHECK(a.block(3) != a.block(4));
}

TEST_CASE("uniforms lie strictly inside (0, 1)") {
  const CounterRng r({1, 0});
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = r.uniform(i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  const CounterRng r({2024, 3});
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = r.normals(static_cast<std::uint64_t>(i));
    for (double x : z) {
      s1 += x;
      s2 += x * x;
      s4 += x * x * x * x;
    }
    cross += z[0] * z[1];
  }
  const double m = 2.0 * n;
  CHECK(std::abs(s1 / m) < 5.0 / std::sqrt(m));
  CHECK(std::abs(s2 / m - 1.0) < 5.0 * std::sqrt(2.0 / m));
  CHECK(std::abs(s4 / m - 3.0) < 5.0 * std::sqrt(96.0 / m));
  CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
}

TEST_CASE("streams are uncorrelated") {
  const CounterRng a({9, 0}), b({9, 1});
  const int n = 100000;
  double c = 0;
  for (int i = 0; i < n; ++i) c += a.normals(i)[0] * b.normals(i)[0];
  CHECK(std::abs(c / n) < 5.0 / std::sqrt(n));
}

TEST_CASE("splitmix64 mixes") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(splitmix64(i));
  CHECK(seen.size() == 1000);
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafull);
}
