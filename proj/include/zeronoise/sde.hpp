#pragma once

// Stochastic integrators: the perturbed system in original and fast time,
// the limiting slow (U, V) diffusion, its time-changed (H, K) form, and the
// time changes connecting the two.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zeronoise/dynamics.hpp"
#include "zeronoise/rng.hpp"

namespace zeronoise {

struct NoiseParams {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double eps = 0.0;
};

/// Raised when a simulation leaves its domain (blow-up, stuck step guard).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme {
  EulerMaruyama,
  /// Strang splitting: exact Ornstein-Uhlenbeck half steps around a
  /// projected RK4 solve of the conservative part. Stays stable in fast
  /// time where explicit Euler gains energy at rate dt^2 |B|^2 per step.
  Splitting,
};

struct SdeOptions {
  Scheme scheme = Scheme::EulerMaruyama;
  std::size_t record_every = 1;
  /// Multiplies sigma in the noise term only. 0 switches the noise off,
  /// which is how the sigma -> 0 reduction is exercised.
  double diffusion_scale = 1.0;
};

struct UVTrajectory {
  std::vector<double> times;
  std::vector<double> u;
  std::vector<double> v;
  TrajectoryMeta meta;

  std::size_t size() const { return times.size(); }
};

/// dxi = a B(xi, xi) dt - b xi dt + c sigma dW, stepped by a fixed dt. The
/// full system has (a, b, c) = (1, eps, sqrt(eps)); the fast one
/// (1/eps, 1, 1).
class PerturbedStepper {
 public:
  PerturbedStepper(double a, double b, double c, const NoiseParams& p, double dt, RngSpec rng,
                   const SdeOptions& opts);

  static PerturbedStepper full(const NoiseParams& p, double dt, RngSpec rng, const SdeOptions& opts = {});
  static PerturbedStepper fast(const NoiseParams& p, double dt, RngSpec rng, const SdeOptions& opts = {});

  /// Advance one step. `k` is the global step index (draws are keyed by it).
  /// Throws SimulationError if |xi| exceeds 1e6.
  State3 step(const State3& s, std::uint64_t k) const;

  double dt() const { return dt_; }

 private:
  State3 ou_half(const State3& s, std::uint64_t draw) const;

  double a_, b_, c_;
  double s1_, s2_;
  double dt_;
  CounterRng rng_;
  Scheme scheme_;
  // splitting constants
  double decay_half_ = 1.0;
  double ou_sd_ = 0.0;
  std::size_t substeps_ = 1;
};

/// Euler-Maruyama (or splitting, per opts) path of
///   dxi = B(xi, xi) dt - eps xi dt + sqrt(eps) sigma dW,
/// with noise in x and y only. eps = 0 is accepted and gives the
/// deterministic flow integrated with the same scheme.
Trajectory simulate_full(const State3& xi0, const NoiseParams& p, double T, double dt, RngSpec rng,
                         const SdeOptions& opts = {});

/// Fast-time path dxi = (1/eps) B dt - xi dt + sigma dW. Requires eps > 0;
/// prints a warning when dt > 0.1 eps.
Trajectory simulate_fast(const State3& xi0, const NoiseParams& p, double T, double dt, RngSpec rng,
                         const SdeOptions& opts = {});

UVTrajectory uv_from(const Trajectory& traj);

/// Drift and diffusion of the limiting (U, V) system.
class LimitUvStepper {
 public:
  LimitUvStepper(const NoiseParams& p, double dt, RngSpec rng, double diffusion_scale = 1.0);
  /// Full-truncation Euler step on the auxiliary state (u, v), which may go
  /// negative; coefficients are evaluated at the positive parts, and
  /// max(u, 0), max(v, 0) is the reported state. Keeping the auxiliary
  /// values avoids a spurious trap: clamping both to 0 in the same step
  /// would put the path exactly on the diagonal, where for sigma1 = sigma2
  /// the scheme has zero diffusion and equal drifts forever.
  void step(double& u, double& v, std::uint64_t k) const;

 private:
  double s1_, s2_, dt_, sqdt_, scale_;
  CounterRng rng_;
};

UVTrajectory simulate_limit_uv(double u0, double v0, const NoiseParams& p, double T, double dt, RngSpec rng,
                               const SdeOptions& opts = {});

/// Euler step for the time-changed system. When a proposed state falls
/// within 1e-10 (relative) of the diagonal it is rejected and the interval
/// is re-integrated in halves with fresh draws, up to 40 levels deep.
class HkStepper {
 public:
  /// Same full-truncation convention as LimitUvStepper.
  HkStepper(const NoiseParams& p, double dt, RngSpec rng, double diffusion_scale = 1.0);
  void step(double& h, double& k, std::uint64_t index) const;
  /// Number of rejected proposals so far (diagnostic only).
  std::uint64_t rejections() const { return rejections_; }

 private:
  bool try_advance(double& h, double& k, double dt, std::uint64_t step, int level, std::uint64_t j) const;
  void advance(double& h, double& k, double dt, std::uint64_t step, int level, std::uint64_t j) const;

  double s1_, s2_, dt_, scale_;
  RngSpec rng_;
  mutable std::uint64_t rejections_ = 0;
};

UVTrajectory simulate_hk(double h0, double k0, const NoiseParams& p, double T, double dt, RngSpec rng,
                         const SdeOptions& opts = {});

struct TimeChangeMap {
  std::vector<double> s_grid;
  std::vector<double> a_values;
  std::string direction;
};

/// Threshold below which A_T / T counts as stuck on the diagonal.
inline constexpr double kStuckThreshold = 1e-9;

/// A_t = int_0^t F(U_s, V_s) ds (trapezoid), H_t = U_{eta_t} with eta the
/// piecewise-linear inverse of A. Output is on a uniform grid in the new
/// time, `refine` points per input interval on average.
std::pair<UVTrajectory, TimeChangeMap> time_change_forward(const UVTrajectory& uv, std::size_t refine = 1);

/// Inverse map: integrates 1/F(H, K) (ratio capped at 1 - 1e-10).
std::pair<UVTrajectory, TimeChangeMap> time_change_inverse(const UVTrajectory& hk, std::size_t refine = 1);

/// Trapezoid time integral of path(t)^2 for a uniformly sampled path.
double quadratic_variation(std::span<const double> path, double dt);

/// Running version of quadratic_variation for on-the-fly accumulation.
class QvAccumulator {
 public:
  explicit QvAccumulator(double dt) : dt_(dt) {}
  void push(double x);
  double value() const { return total_; }
  double elapsed() const { return n_ > 0 ? static_cast<double>(n_ - 1) * dt_ : 0.0; }

 private:
  double dt_;
  double total_ = 0.0;
  double prev_sq_ = 0.0;
  std::size_t n_ = 0;
};

void validate_noise(const NoiseParams& p, bool require_eps_positive);

}  // namespace zeronoise
