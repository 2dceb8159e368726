#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, index), so paths can be generated in any order and on any
// thread without sharing state.

#include <array>
#include <cstdint>

namespace zeronoise {

struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngSpec with_stream(std::uint64_t s) const { return {seed, s}; }
};

/// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// SplitMix64 finaliser; used to derive sub-seeds.
std::uint64_t splitmix64(std::uint64_t x);

class CounterRng {
 public:
  explicit CounterRng(RngSpec spec) : spec_(spec) {}

  /// Four uniform 32-bit words for block `index`.
  std::array<std::uint32_t, 4> block(std::uint64_t index) const;

  /// Two independent standard normals for block `index` (Box-Muller on the
  /// four words, 53-bit uniforms).
  std::array<double, 2> normals(std::uint64_t index) const;

  /// Uniform in (0, 1) from block `index`, word pair 0.
  double uniform(std::uint64_t index) const;

  const RngSpec& spec() const { return spec_; }

 private:
  RngSpec spec_;
};

}  // namespace zeronoise
