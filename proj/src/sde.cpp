#include "zeronoise/sde.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "zeronoise/averaging.hpp"

namespace zeronoise {

namespace {

constexpr double kBlowUp2 = 1e12;  // |xi| > 1e6
constexpr double kMaxFlowSubstep = 0.05;
constexpr double kHkGuard = 1e-10;
constexpr int kHkMaxHalvings = 40;

std::size_t step_count(double T, double dt) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(T / dt - 1e-9)));
}

void check_horizon(double T, double dt, const char* who) {
  if (!std::isfinite(T) || !std::isfinite(dt) || T <= 0.0 || dt <= 0.0)
    throw std::invalid_argument(std::string(who) + ": requires finite T > 0 and dt > 0");
}

// (1 - Lambda(r)) for the G-term, with the degenerate axis value r = 0.
double one_minus_lambda(double h, double k) { return 1.0 - lambda_fn(ratio_of(h, k)); }

Trajectory run_perturbed(const PerturbedStepper& stepper, const State3& xi0, double T, std::size_t n,
                         const SdeOptions& opts, RngSpec rng, const char* method) {
  const double dt = stepper.dt();
  Trajectory traj;
  traj.meta.dt = dt;
  traj.meta.method = method;
  traj.meta.seed = rng.seed;
  traj.meta.stream = rng.stream;
  traj.times.reserve(n / opts.record_every + 2);
  traj.states.reserve(n / opts.record_every + 2);
  traj.times.push_back(0.0);
  traj.states.push_back(xi0);
  State3 s = xi0;
  for (std::size_t i = 0; i < n; ++i) {
    s = stepper.step(s, i);
    const std::size_t done = i + 1;
    if (done % opts.record_every == 0 || done == n) {
      traj.times.push_back(done == n ? T : static_cast<double>(done) * dt);
      traj.states.push_back(s);
    }
  }
  return traj;
}

const char* scheme_tag(Scheme s) { return s == Scheme::Splitting ? "strang-splitting" : "euler-maruyama"; }

}  // namespace

void validate_noise(const NoiseParams& p, bool require_eps_positive) {
  if (!std::isfinite(p.sigma1) || !std::isfinite(p.sigma2) || !std::isfinite(p.eps))
    throw std::invalid_argument("noise parameters must be finite");
  if (p.sigma1 <= 0.0 || p.sigma2 <= 0.0) throw std::invalid_argument("sigma1 and sigma2 must be > 0");
  if (p.eps < 0.0 || (require_eps_positive && p.eps == 0.0))
    throw std::invalid_argument(require_eps_positive ? "eps must be > 0" : "eps must be >= 0");
}

PerturbedStepper::PerturbedStepper(double a, double b, double c, const NoiseParams& p, double dt, RngSpec rng,
                                   const SdeOptions& opts)
    : a_(a),
      b_(b),
      c_(c * opts.diffusion_scale),
      s1_(p.sigma1),
      s2_(p.sigma2),
      dt_(dt),
      rng_(rng),
      scheme_(opts.scheme) {
  if (opts.record_every == 0) throw std::invalid_argument("record_every must be positive");
  if (scheme_ == Scheme::Splitting) {
    decay_half_ = std::exp(-0.5 * b_ * dt_);
    const double var = b_ > 0.0 ? -std::expm1(-b_ * dt_) / (2.0 * b_) : 0.5 * dt_;
    ou_sd_ = c_ * std::sqrt(var);
    substeps_ = static_cast<std::size_t>(std::max(1.0, std::ceil(a_ * dt_ / kMaxFlowSubstep - 1e-12)));
  }
}

PerturbedStepper PerturbedStepper::full(const NoiseParams& p, double dt, RngSpec rng, const SdeOptions& opts) {
  return PerturbedStepper(1.0, p.eps, std::sqrt(p.eps), p, dt, rng, opts);
}

PerturbedStepper PerturbedStepper::fast(const NoiseParams& p, double dt, RngSpec rng, const SdeOptions& opts) {
  return PerturbedStepper(1.0 / p.eps, 1.0, 1.0, p, dt, rng, opts);
}

State3 PerturbedStepper::ou_half(const State3& s, std::uint64_t draw) const {
  const auto n = rng_.normals(draw);
  return {decay_half_ * s.x + ou_sd_ * s1_ * n[0], decay_half_ * s.y + ou_sd_ * s2_ * n[1], decay_half_ * s.z};
}

State3 PerturbedStepper::step(const State3& s, std::uint64_t k) const {
  State3 out;
  if (scheme_ == Scheme::EulerMaruyama) {
    const auto n = rng_.normals(2 * k);
    const double sq = c_ * std::sqrt(dt_);
    const State3 f = vector_field(s);
    out = {s.x + (a_ * f.x - b_ * s.x) * dt_ + sq * s1_ * n[0], s.y + (a_ * f.y - b_ * s.y) * dt_ + sq * s2_ * n[1],
           s.z + (a_ * f.z - b_ * s.z) * dt_};
  } else {
    out = ou_half(s, 2 * k);
    const ConservedPair target = phi(out);
    const double h = a_ * dt_ / static_cast<double>(substeps_);
    for (std::size_t i = 0; i < substeps_; ++i) out = projected_step(out, h, target);
    out = ou_half(out, 2 * k + 1);
  }
  if (!(norm2(out) <= kBlowUp2)) throw SimulationError("perturbed system left |xi| <= 1e6 (blow-up guard)");
  return out;
}

Trajectory simulate_full(const State3& xi0, const NoiseParams& p, double T, double dt, RngSpec rng,
                         const SdeOptions& opts) {
  if (!xi0.finite()) throw std::invalid_argument("simulate_full: non-finite initial state");
  check_horizon(T, dt, "simulate_full");
  validate_noise(p, false);
  const std::size_t n = step_count(T, dt);
  const PerturbedStepper stepper = PerturbedStepper::full(p, T / static_cast<double>(n), rng, opts);
  return run_perturbed(stepper, xi0, T, n, opts, rng, scheme_tag(opts.scheme));
}

Trajectory simulate_fast(const State3& xi0, const NoiseParams& p, double T, double dt, RngSpec rng,
                         const SdeOptions& opts) {
  if (!xi0.finite()) throw std::invalid_argument("simulate_fast: non-finite initial state");
  check_horizon(T, dt, "simulate_fast");
  validate_noise(p, true);
  if (dt > 0.1 * p.eps)
    std::clog << "zeronoise: warning: simulate_fast with dt/eps = " << dt / p.eps << " > 0.1\n";
  const std::size_t n = step_count(T, dt);
  const PerturbedStepper stepper = PerturbedStepper::fast(p, T / static_cast<double>(n), rng, opts);
  return run_perturbed(stepper, xi0, T, n, opts, rng, scheme_tag(opts.scheme));
}

UVTrajectory uv_from(const Trajectory& traj) {
  UVTrajectory out;
  out.times = traj.times;
  out.meta = traj.meta;
  out.u.reserve(traj.size());
  out.v.reserve(traj.size());
  for (const State3& s : traj.states) {
    const ConservedPair p = phi(s);
    out.u.push_back(p.u);
    out.v.push_back(p.v);
  }
  return out;
}

LimitUvStepper::LimitUvStepper(const NoiseParams& p, double dt, RngSpec rng, double diffusion_scale)
    : s1_(p.sigma1), s2_(p.sigma2), dt_(dt), sqdt_(std::sqrt(dt)), scale_(diffusion_scale), rng_(rng) {}

void LimitUvStepper::step(double& u, double& v, std::uint64_t k) const {
  const auto n = rng_.normals(k);
  const double up = std::max(0.0, u);
  const double vp = std::max(0.0, v);
  const double g = gamma_fn(up, vp);
  u += (2.0 * s1_ * s1_ - 2.0 * up) * dt_ + scale_ * s1_ * std::sqrt(8.0 * std::max(0.0, up - g)) * sqdt_ * n[0];
  v += (2.0 * s2_ * s2_ - 2.0 * vp) * dt_ + scale_ * s2_ * std::sqrt(8.0 * std::max(0.0, vp - g)) * sqdt_ * n[1];
}

UVTrajectory simulate_limit_uv(double u0, double v0, const NoiseParams& p, double T, double dt, RngSpec rng,
                               const SdeOptions& opts) {
  if (!std::isfinite(u0) || !std::isfinite(v0) || u0 <= 0.0 || v0 <= 0.0)
    throw std::invalid_argument("simulate_limit_uv: requires finite u0, v0 > 0");
  check_horizon(T, dt, "simulate_limit_uv");
  validate_noise(p, false);
  if (opts.record_every == 0) throw std::invalid_argument("record_every must be positive");
  const std::size_t n = step_count(T, dt);
  const double h = T / static_cast<double>(n);
  const LimitUvStepper stepper(p, h, rng, opts.diffusion_scale);

  UVTrajectory out;
  out.meta = {h, "full-truncation-euler", rng.seed, rng.stream};
  out.times.push_back(0.0);
  out.u.push_back(u0);
  out.v.push_back(v0);
  double u = u0, v = v0;
  for (std::size_t i = 0; i < n; ++i) {
    stepper.step(u, v, i);
    const std::size_t done = i + 1;
    if (done % opts.record_every == 0 || done == n) {
      out.times.push_back(done == n ? T : static_cast<double>(done) * h);
      out.u.push_back(std::max(0.0, u));
      out.v.push_back(std::max(0.0, v));
    }
  }
  return out;
}

HkStepper::HkStepper(const NoiseParams& p, double dt, RngSpec rng, double diffusion_scale)
    : s1_(p.sigma1), s2_(p.sigma2), dt_(dt), scale_(diffusion_scale), rng_(rng) {}

bool HkStepper::try_advance(double& h, double& k, double dt, std::uint64_t step, int level, std::uint64_t j) const {
  std::array<double, 2> n;
  if (level == 0) {
    n = CounterRng(rng_).normals(step);
  } else {
    const std::uint64_t sub = splitmix64(rng_.seed ^ splitmix64(step * 64 + static_cast<std::uint64_t>(level)));
    n = CounterRng({sub, rng_.stream}).normals(j);
  }
  const double hp = std::max(0.0, h);
  const double kp = std::max(0.0, k);
  const double m = std::min(hp, kp);
  const double f = f_of_ratio(ratio_of(hp, kp));
  const double mg = m > 0.0 ? m * one_minus_lambda(hp, kp) / f : 0.0;
  const double sq = std::sqrt(dt);
  const double dh = 2.0 * (s1_ * s1_ - hp) / f * dt +
                    scale_ * 2.0 * std::sqrt(2.0) * s1_ * std::sqrt(std::max(0.0, (hp - m) / f + mg)) * sq * n[0];
  const double dk = 2.0 * (s2_ * s2_ - kp) / f * dt +
                    scale_ * 2.0 * std::sqrt(2.0) * s2_ * std::sqrt(std::max(0.0, (kp - m) / f + mg)) * sq * n[1];
  const double hn = std::max(0.0, h + dh);
  const double kn = std::max(0.0, k + dk);
  const double hi = std::max(hn, kn);
  if (hi > 0.0 && std::abs(hn - kn) < kHkGuard * hi) return false;
  h += dh;
  k += dk;
  return true;
}

void HkStepper::advance(double& h, double& k, double dt, std::uint64_t step, int level, std::uint64_t j) const {
  if (try_advance(h, k, dt, step, level, j)) return;
  ++rejections_;
  if (level >= kHkMaxHalvings)
    throw SimulationError("simulate_hk: diagonal guard still active after 40 step halvings at step " +
                          std::to_string(step));
  advance(h, k, 0.5 * dt, step, level + 1, 2 * j);
  advance(h, k, 0.5 * dt, step, level + 1, 2 * j + 1);
}

void HkStepper::step(double& h, double& k, std::uint64_t index) const {
  const double hp = std::max(0.0, h), kp = std::max(0.0, k);
  const double hi = std::max(hp, kp);
  if (hi > 0.0 && std::abs(hp - kp) < kHkGuard * hi)
    throw SimulationError("simulate_hk: state on the diagonal, drift is singular");
  advance(h, k, dt_, index, 0, 0);
}

UVTrajectory simulate_hk(double h0, double k0, const NoiseParams& p, double T, double dt, RngSpec rng,
                         const SdeOptions& opts) {
  if (!std::isfinite(h0) || !std::isfinite(k0) || h0 <= 0.0 || k0 <= 0.0)
    throw std::invalid_argument("simulate_hk: requires finite h0, k0 > 0");
  if (std::abs(h0 - k0) < kHkGuard * std::max(h0, k0))
    throw std::invalid_argument("simulate_hk: initial state on the diagonal (F = 0)");
  check_horizon(T, dt, "simulate_hk");
  validate_noise(p, false);
  if (opts.record_every == 0) throw std::invalid_argument("record_every must be positive");
  const std::size_t n = step_count(T, dt);
  const double step = T / static_cast<double>(n);
  const HkStepper stepper(p, step, rng, opts.diffusion_scale);

  UVTrajectory out;
  out.meta = {step, "euler-halving", rng.seed, rng.stream};
  out.times.push_back(0.0);
  out.u.push_back(h0);
  out.v.push_back(k0);
  double h = h0, k = k0;
  for (std::size_t i = 0; i < n; ++i) {
    stepper.step(h, k, i);
    const std::size_t done = i + 1;
    if (done % opts.record_every == 0 || done == n) {
      out.times.push_back(done == n ? T : static_cast<double>(done) * step);
      out.u.push_back(std::max(0.0, h));
      out.v.push_back(std::max(0.0, k));
    }
  }
  return out;
}

double quadratic_variation(std::span<const double> path, double dt) {
  QvAccumulator acc(dt);
  for (double x : path) acc.push(x);
  return acc.value();
}

void QvAccumulator::push(double x) {
  const double sq = x * x;
  if (n_ > 0) total_ += 0.5 * (prev_sq_ + sq) * dt_;
  prev_sq_ = sq;
  ++n_;
}

}  // namespace zeronoise
