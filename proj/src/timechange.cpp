// Random time changes between the (U, V) and (H, K) clocks.

#include <algorithm>
#include <cmath>

#include "zeronoise/averaging.hpp"
#include "zeronoise/sde.hpp"

namespace zeronoise {

namespace {

constexpr double kRatioCap = 1.0 - 1e-10;

void check_path(const UVTrajectory& p, const char* who) {
  if (p.size() < 2 || p.u.size() != p.size() || p.v.size() != p.size())
    throw std::invalid_argument(std::string(who) + ": need at least two samples of equal length");
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p.times[i] > p.times[i - 1])) throw std::invalid_argument(std::string(who) + ": times must increase");
}

// Accumulate A(s) = int_0^s rate(u, v) ds by trapezoid, then resample the
// path on a uniform grid in the new clock t = A(s) by linear interpolation.
template <class Rate>
std::pair<UVTrajectory, TimeChangeMap> change_clock(const UVTrajectory& in, std::size_t refine, Rate rate,
                                                    const char* who, const char* direction) {
  check_path(in, who);
  if (refine == 0) throw std::invalid_argument(std::string(who) + ": refine must be positive");
  const std::size_t n = in.size();

  TimeChangeMap map;
  map.direction = direction;
  map.s_grid = in.times;
  map.a_values.assign(n, 0.0);
  double prev = rate(in.u[0], in.v[0]);
  for (std::size_t i = 1; i < n; ++i) {
    const double cur = rate(in.u[i], in.v[i]);
    map.a_values[i] = map.a_values[i - 1] + 0.5 * (prev + cur) * (in.times[i] - in.times[i - 1]);
    prev = cur;
  }
  const double span = in.times.back() - in.times.front();
  const double total = map.a_values.back();
  if (!(total > kStuckThreshold * span))
    throw SimulationError(std::string(who) + ": accumulated clock A_T is ~0 (path stuck on the diagonal)");

  const std::size_t m = (n - 1) * refine;
  const double dt = total / static_cast<double>(m);
  UVTrajectory out;
  out.meta = in.meta;
  out.meta.dt = dt;
  out.meta.method = in.meta.method + "+" + direction;
  out.times.resize(m + 1);
  out.u.resize(m + 1);
  out.v.resize(m + 1);
  std::size_t j = 0;
  for (std::size_t i = 0; i <= m; ++i) {
    const double t = i == m ? total : static_cast<double>(i) * dt;
    while (j + 2 < n && map.a_values[j + 1] < t) ++j;
    // A is nondecreasing; flat pieces only occur where the rate is 0.
    const double a0 = map.a_values[j];
    const double a1 = map.a_values[j + 1];
    const double w = a1 > a0 ? std::clamp((t - a0) / (a1 - a0), 0.0, 1.0) : 0.0;
    out.times[i] = t;
    out.u[i] = in.u[j] + w * (in.u[j + 1] - in.u[j]);
    out.v[i] = in.v[j] + w * (in.v[j + 1] - in.v[j]);
  }
  return {std::move(out), std::move(map)};
}

}  // namespace

std::pair<UVTrajectory, TimeChangeMap> time_change_forward(const UVTrajectory& uv, std::size_t refine) {
  return change_clock(
      uv, refine, [](double u, double v) { return f_of_ratio(ratio_of(u, v)); }, "time_change_forward", "forward");
}

std::pair<UVTrajectory, TimeChangeMap> time_change_inverse(const UVTrajectory& hk, std::size_t refine) {
  return change_clock(
      hk, refine, [](double h, double k) { return 1.0 / f_of_ratio(std::min(ratio_of(h, k), kRatioCap)); },
      "time_change_inverse", "inverse");
}

}  // namespace zeronoise
