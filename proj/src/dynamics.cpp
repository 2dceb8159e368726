#include "zeronoise/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "zeronoise/averaging.hpp"

namespace zeronoise {

State3 bilinear(const State3& a, const State3& b) {
  return {0.5 * (a.y * b.z + b.y * a.z), 0.5 * (a.x * b.z + b.x * a.z),
          0.5 * (-2.0 * a.x * b.y - 2.0 * b.x * a.y)};
}

ConservedPair phi(const State3& s) {
  const double z2 = s.z * s.z;
  return {2.0 * s.x * s.x + z2, 2.0 * s.y * s.y + z2};
}

int sn(const State3& s) {
  const double ax = std::abs(s.x);
  const double ay = std::abs(s.y);
  if (ax > ay) return s.x > 0.0 ? 1 : -1;
  if (ay > ax) return s.y > 0.0 ? 1 : -1;
  return 0;
}

bool near_diagonal(double u, double v) {
  const double hi = std::max(u, v);
  return hi > 0.0 && std::abs(u - v) <= kDiagonalGuard * hi;
}

OrbitClass classify(const State3& s) {
  const ConservedPair p = phi(s);
  const int zeros = (s.x == 0.0) + (s.y == 0.0) + (s.z == 0.0);
  if (zeros >= 2) return {OrbitKind::FixedPointLine, p};
  if (near_diagonal(p.u, p.v)) return {OrbitKind::Heteroclinic, p};
  return {sn(s) > 0 ? OrbitKind::PeriodicPlus : OrbitKind::PeriodicMinus, p};
}

State3 rk4_step(const State3& s, double h) {
  const State3 k1 = vector_field(s);
  const State3 k2 = vector_field(s + (0.5 * h) * k1);
  const State3 k3 = vector_field(s + (0.5 * h) * k2);
  const State3 k4 = vector_field(s + h * k3);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

State3 project_to_level(const State3& s, const ConservedPair& target) {
  const ConservedPair now = phi(s);
  const double r1 = target.u - now.u;
  const double r2 = target.v - now.v;
  // J = [[4x, 0, 2z], [0, 4y, 2z]]
  const double a = 16.0 * s.x * s.x + 4.0 * s.z * s.z;
  const double b = 4.0 * s.z * s.z;
  const double d = 16.0 * s.y * s.y + 4.0 * s.z * s.z;
  const double det = a * d - b * b;
  const double scale = (a + d) * (a + d);
  if (!(scale > 0.0) || det <= 1e-10 * scale) return s;
  const double l1 = (d * r1 - b * r2) / det;
  const double l2 = (a * r2 - b * r1) / det;
  return {s.x + 4.0 * s.x * l1, s.y + 4.0 * s.y * l2, s.z + 2.0 * s.z * (l1 + l2)};
}

State3 projected_step(const State3& s, double h, const ConservedPair& target) {
  return project_to_level(rk4_step(s, h), target);
}

State3 advance_flow(const State3& s, double duration, double max_step, const ConservedPair& target) {
  if (duration <= 0.0) return s;
  const auto n = static_cast<std::size_t>(std::ceil(duration / max_step - 1e-12));
  const double h = duration / static_cast<double>(std::max<std::size_t>(n, 1));
  State3 out = s;
  for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i) out = projected_step(out, h, target);
  return out;
}

Trajectory flow(const State3& xi0, double T, double dt, std::size_t record_every) {
  if (!xi0.finite() || !std::isfinite(T) || !std::isfinite(dt))
    throw std::invalid_argument("flow: non-finite input");
  if (T <= 0.0 || dt <= 0.0) throw std::invalid_argument("flow: requires T > 0 and dt > 0");
  if (record_every == 0) throw std::invalid_argument("flow: record_every must be positive");

  const ConservedPair target = phi(xi0);
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));

  Trajectory traj;
  traj.meta.dt = dt;
  traj.meta.method = "rk4+projection";
  traj.times.reserve(steps / record_every + 2);
  traj.states.reserve(steps / record_every + 2);
  traj.times.push_back(0.0);
  traj.states.push_back(xi0);

  State3 s = xi0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t_prev = static_cast<double>(i - 1) * dt;
    const double t = (i == steps) ? T : static_cast<double>(i) * dt;
    s = projected_step(s, t - t_prev, target);
    if (i % record_every == 0 || i == steps) {
      traj.times.push_back(t);
      traj.states.push_back(s);
    }
  }
  return traj;
}

double period(double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) throw std::invalid_argument("period: non-finite input");
  if (std::min(u, v) <= 0.0) throw std::invalid_argument("period: requires u, v > 0");
  if (near_diagonal(u, v)) return std::numeric_limits<double>::infinity();
  const double hi = std::max(u, v);
  const double m = std::min(u, v) / hi;
  return 4.0 * elliptic_ke(m).K / std::sqrt(hi);
}

State3 orbit_point(double u, double v, int sign, double theta) {
  if (std::min(u, v) <= 0.0) throw std::invalid_argument("orbit_point: requires u, v > 0");
  if (near_diagonal(u, v)) throw std::invalid_argument("orbit_point: heteroclinic level set (u == v)");
  if (sign != 1 && sign != -1) throw std::invalid_argument("orbit_point: sign must be +1 or -1");

  const double s = std::sin(theta);
  const double c = std::cos(theta);
  State3 p;
  if (u > v) {
    p.z = std::sqrt(v) * s;
    p.x = std::sqrt(u / 2.0) * std::sqrt(std::max(0.0, 1.0 - (v / u) * s * s));
    p.y = std::sqrt(v / 2.0) * c;
  } else {
    p.z = std::sqrt(u) * s;
    p.x = std::sqrt(u / 2.0) * c;
    p.y = std::sqrt(v / 2.0) * std::sqrt(std::max(0.0, 1.0 - (u / v) * s * s));
  }
  return sign > 0 ? p : apply_sym_pm(p);
}

}  // namespace zeronoise
