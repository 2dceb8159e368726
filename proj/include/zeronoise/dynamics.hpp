#pragma once

// Deterministic conservative system d xi/dt = B(xi, xi) on R^3: the bilinear
// form, its two conserved quantities, orbit geometry, and a projected
// fourth-order integrator.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zeronoise {

struct State3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  State3& operator+=(const State3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend State3 operator+(State3 a, const State3& b) { return a += b; }
  friend State3 operator-(const State3& a, const State3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend State3 operator*(double s, const State3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const State3&, const State3&) = default;
};

inline double dot(const State3& a, const State3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(const State3& a) { return dot(a, a); }
inline double norm(const State3& a) { return std::sqrt(norm2(a)); }

/// Slow variables (u, v) = (2x^2 + z^2, 2y^2 + z^2).
struct ConservedPair {
  double u = 0.0;
  double v = 0.0;

  double lo() const { return u < v ? u : v; }
  double hi() const { return u < v ? v : u; }
  friend bool operator==(const ConservedPair&, const ConservedPair&) = default;
};

enum class OrbitKind { PeriodicPlus, PeriodicMinus, FixedPointLine, Heteroclinic };

struct OrbitClass {
  OrbitKind kind;
  ConservedPair pair;
};

struct TrajectoryMeta {
  double dt = 0.0;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> stream;
};

/// Time-stamped sample path of the full state.
struct Trajectory {
  std::vector<double> times;
  std::vector<State3> states;
  TrajectoryMeta meta;

  std::size_t size() const { return times.size(); }
};

/// Relative separation |u - v| / (u v v) below which an orbit is treated as
/// lying on the heteroclinic set.
inline constexpr double kDiagonalGuard = 1e-12;

/// Symmetric bilinear form B(a, b).
State3 bilinear(const State3& a, const State3& b);

/// The vector field B(xi, xi) = (yz, xz, -2xy).
inline State3 vector_field(const State3& s) { return {s.y * s.z, s.x * s.z, -2.0 * s.x * s.y}; }

ConservedPair phi(const State3& s);

/// Orbit sign: +1 / -1 for Gamma^+ / Gamma^-, and 0 on |x| = |y| where the
/// sign is undefined.
int sn(const State3& s);

OrbitClass classify(const State3& s);

/// True when (u, v) sits within kDiagonalGuard of the diagonal u = v.
bool near_diagonal(double u, double v);

/// One classical RK4 step of the deterministic flow.
State3 rk4_step(const State3& s, double h);

/// One Newton step pulling `s` back onto the level set Phi = target. The
/// step is the minimum-norm correction; it is skipped when the Jacobian of
/// Phi is (nearly) rank deficient, i.e. on the fixed-point lines.
State3 project_to_level(const State3& s, const ConservedPair& target);

/// RK4 step followed by projection onto the level set.
State3 projected_step(const State3& s, double h, const ConservedPair& target);

/// Advance the deterministic flow for `duration` time units using projected
/// RK4 sub-steps no larger than `max_step`.
State3 advance_flow(const State3& s, double duration, double max_step, const ConservedPair& target);

/// Integrate the deterministic flow on [0, T]. The last step is shortened so
/// the final stored time equals T. Every `record_every`-th step is stored
/// (the endpoint is always stored).
Trajectory flow(const State3& xi0, double T, double dt = 1e-3, std::size_t record_every = 1);

/// Period of the orbit with conserved values (u, v):
///   tau(u, v) = 4 K(m) / sqrt(u v v),  m = (u ^ v) / (u v v).
/// Returns +infinity within kDiagonalGuard of the diagonal.
double period(double u, double v);

/// Point gamma_{u,v}(theta) on Gamma^sign_{u,v}, with z(theta) = sqrt(u ^ v) sin(theta).
State3 orbit_point(double u, double v, int sign, double theta);

inline State3 apply_sym_e(const State3& s) { return {s.y, s.x, s.z}; }
inline State3 apply_sym_pm(const State3& s) { return {-s.x, -s.y, s.z}; }

}  // namespace zeronoise
