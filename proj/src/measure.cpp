#include "zeronoise/measure.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "zeronoise/ensemble.hpp"

namespace zeronoise {

EmpiricalMeasure::EmpiricalMeasure(int dim) : dim_(dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("EmpiricalMeasure: dimension must be 2 or 3");
}

void EmpiricalMeasure::add(std::span<const double> point, double weight) {
  if (static_cast<int>(point.size()) != dim_) throw std::invalid_argument("EmpiricalMeasure::add: dimension mismatch");
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("EmpiricalMeasure::add: weight must be finite and >= 0");
  coords_.insert(coords_.end(), point.begin(), point.end());
  raw_weights_.push_back(weight);
  total_ += weight;
}

void EmpiricalMeasure::reserve(std::size_t n) {
  coords_.reserve(n * static_cast<std::size_t>(dim_));
  raw_weights_.reserve(n);
}

EmpiricalMeasure& EmpiricalMeasure::merge(const EmpiricalMeasure& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("EmpiricalMeasure::merge: dimension mismatch");
  coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
  raw_weights_.insert(raw_weights_.end(), other.raw_weights_.begin(), other.raw_weights_.end());
  total_ += other.total_;
  return *this;
}

EmpiricalMeasure EmpiricalMeasure::merged(std::span<const EmpiricalMeasure> parts) {
  if (parts.empty()) throw std::invalid_argument("EmpiricalMeasure::merged: nothing to merge");
  EmpiricalMeasure out(parts.front().dim());
  std::size_t n = 0;
  for (const auto& p : parts) n += p.size();
  out.reserve(n);
  for (const auto& p : parts) out.merge(p);
  return out;
}

double EmpiricalMeasure::expect(const std::function<double(std::span<const double>)>& f) const {
  if (empty() || !(total_ > 0.0)) throw std::runtime_error("EmpiricalMeasure::expect: empty measure");
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) acc += raw_weights_[i] * f(point(i));
  return acc / total_;
}

double freedman_diaconis_width(std::vector<double> values) {
  if (values.size() < 2) return 0.0;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  return 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
}

Histogram EmpiricalMeasure::histogram(const std::function<double(std::span<const double>)>& proj,
                                      std::vector<double> edges) const {
  if (empty()) throw std::runtime_error("EmpiricalMeasure::histogram: empty measure");
  std::vector<double> vals(size());
  for (std::size_t i = 0; i < size(); ++i) vals[i] = proj(point(i));
  if (edges.empty()) {
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    double width = freedman_diaconis_width(vals);
    const double range = *mx - *mn;
    if (!(width > 0.0) || range <= 0.0) {
      edges = {*mn - 0.5, *mx + 0.5};
    } else {
      const auto bins = static_cast<std::size_t>(std::clamp(std::ceil(range / width), 1.0, 1e6));
      width = range / static_cast<double>(bins);
      edges.resize(bins + 1);
      for (std::size_t b = 0; b <= bins; ++b) edges[b] = *mn + width * static_cast<double>(b);
      edges.back() = *mx;
    }
  }
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw std::invalid_argument("EmpiricalMeasure::histogram: edges must be sorted with at least two entries");
  Histogram h;
  h.edges = edges;
  h.masses.assign(edges.size() - 1, 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double x = vals[i];
    if (x < edges.front() || x > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    b = b == 0 ? 0 : b - 1;
    if (b >= h.masses.size()) b = h.masses.size() - 1;  // right edge closed
    h.masses[b] += weight(i);
  }
  return h;
}

EmpiricalMeasure empirical_from(const Trajectory& traj, double burn_in) {
  if (traj.size() == 0 || !(traj.times.back() > burn_in))
    throw std::invalid_argument("empirical_from: horizon must exceed burn_in");
  EmpiricalMeasure m(3);
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= burn_in) m.add(traj.states[i]);
  if (m.empty()) throw std::invalid_argument("empirical_from: no samples after burn_in");
  return m;
}

EmpiricalMeasure empirical_from(const UVTrajectory& traj, double burn_in) {
  if (traj.size() == 0 || !(traj.times.back() > burn_in))
    throw std::invalid_argument("empirical_from: horizon must exceed burn_in");
  EmpiricalMeasure m(2);
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= burn_in) m.add2(traj.u[i], traj.v[i]);
  if (m.empty()) throw std::invalid_argument("empirical_from: no samples after burn_in");
  return m;
}

EmpiricalMeasure push_phi(const EmpiricalMeasure& m) {
  if (m.dim() != 3) throw std::invalid_argument("push_phi: requires a 3D measure");
  EmpiricalMeasure out(2);
  out.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto p = m.point(i);
    const ConservedPair c = phi(State3{p[0], p[1], p[2]});
    out.add2(c.u, c.v, m.raw_weight(i));
  }
  return out;
}

double ks_two_sample(std::span<const double> a, std::span<const double> wa, std::span<const double> b,
                     std::span<const double> wb) {
  if (a.size() != wa.size() || b.size() != wb.size()) throw std::invalid_argument("ks_two_sample: size mismatch");
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  auto order = [](std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    return idx;
  };
  const auto ia = order(a);
  const auto ib = order(b);
  const double ta = std::accumulate(wa.begin(), wa.end(), 0.0);
  const double tb = std::accumulate(wb.begin(), wb.end(), 0.0);
  if (!(ta > 0.0) || !(tb > 0.0)) throw std::invalid_argument("ks_two_sample: zero total weight");
  double fa = 0.0, fb = 0.0, d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ia.size() || j < ib.size()) {
    double x;
    if (j >= ib.size() || (i < ia.size() && a[ia[i]] <= b[ib[j]]))
      x = a[ia[i]];
    else
      x = b[ib[j]];
    while (i < ia.size() && a[ia[i]] == x) fa += wa[ia[i++]];
    while (j < ib.size() && b[ib[j]] == x) fb += wb[ib[j++]];
    d = std::max(d, std::abs(fa / ta - fb / tb));
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> wa(a.size(), 1.0), wb(b.size(), 1.0);
  return ks_two_sample(a, wa, b, wb);
}

std::vector<Projection> slice_projections(int dim) {
  using P = std::span<const double>;
  if (dim == 3)
    return {{"x", [](P p) { return p[0]; }},
            {"y", [](P p) { return p[1]; }},
            {"z", [](P p) { return p[2]; }},
            {"x+y", [](P p) { return p[0] + p[1]; }},
            {"x-y", [](P p) { return p[0] - p[1]; }}};
  if (dim == 2)
    return {{"u", [](P p) { return p[0]; }},
            {"v", [](P p) { return p[1]; }},
            {"u+v", [](P p) { return p[0] + p[1]; }},
            {"u-v", [](P p) { return p[0] - p[1]; }}};
  throw std::invalid_argument("slice_projections: dimension must be 2 or 3");
}

namespace {

std::vector<double> project(const EmpiricalMeasure& m, const Projection& p) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = p.f(m.point(i));
  return out;
}

}  // namespace

double sliced_ks(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sliced_ks: dimension mismatch");
  double d = 0.0;
  for (const auto& p : slice_projections(a.dim())) {
    const auto va = project(a, p);
    const auto vb = project(b, p);
    d = std::max(d, ks_two_sample(va, a.raw_weights(), vb, b.raw_weights()));
  }
  return d;
}

double symmetry_defect(const EmpiricalMeasure& m, Symmetry sym) {
  if (m.dim() != 3) throw std::invalid_argument("symmetry_defect: requires a 3D measure");
  if (m.empty()) throw std::invalid_argument("symmetry_defect: empty measure");
  double d = 0.0;
  for (const auto& p : slice_projections(3)) {
    std::vector<double> va(m.size()), vb(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto q = m.point(i);
      const State3 s{q[0], q[1], q[2]};
      const State3 t = sym == Symmetry::PM ? apply_sym_pm(s) : apply_sym_e(s);
      const std::array<double, 3> img{t.x, t.y, t.z};
      va[i] = p.f(q);
      vb[i] = p.f(img);
    }
    d = std::max(d, ks_two_sample(va, m.raw_weights(), vb, m.raw_weights()));
  }
  return d;
}

int symmetry_active_projections(Symmetry sym) { return sym == Symmetry::PM ? 4 : 3; }

double sup_abs_bm_cdf(double c) {
  if (c <= 0.0) return 0.0;
  const double pi = std::numbers::pi;
  double s = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = std::exp(-pi * pi * m * m / (8.0 * c * c)) / m;
    s += (k % 2 == 0 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(4.0 / pi * s, 0.0, 1.0);
}

double symmetry_critical_value(double alpha, double n_eff, Symmetry sym) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(n_eff > 0.0))
    throw std::invalid_argument("symmetry_critical_value: requires 0 < alpha < 1 and n_eff > 0");
  const double target = 1.0 - alpha / symmetry_active_projections(sym);
  double lo = 0.1, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sup_abs_bm_cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(n_eff);
}

double diag_occupation(const UVTrajectory& uv, double delta, double burn_in) {
  if (!(delta > 0.0)) throw std::invalid_argument("diag_occupation: requires delta > 0");
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    if (uv.times[i] < burn_in) continue;
    ++total;
    if (std::abs(uv.u[i] - uv.v[i]) <= delta) ++hit;
  }
  if (total == 0) throw std::invalid_argument("diag_occupation: no samples after burn_in");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double small_mass(const EmpiricalMeasure& lambda_hat, double delta) {
  if (lambda_hat.dim() != 2) throw std::invalid_argument("small_mass: requires a 2D measure");
  if (!(delta > 0.0)) throw std::invalid_argument("small_mass: requires delta > 0");
  double m = 0.0;
  for (std::size_t i = 0; i < lambda_hat.size(); ++i)
    if (lambda_hat.coord(i, 0) + lambda_hat.coord(i, 1) < delta) m += lambda_hat.raw_weight(i);
  return m / lambda_hat.total_raw_weight();
}

double band_area(double a, double b, double s_lo, double s_hi) {
  // du dv = ds dd / 2 with s = u + v, d = u - v and |d| <= s; both signs of d.
  auto integral = [&](double c, double s0, double s1) {
    // int_{s0}^{s1} min(c, s) ds
    if (s1 <= c) return 0.5 * (s1 * s1 - s0 * s0);
    if (s0 >= c) return c * (s1 - s0);
    return 0.5 * (c * c - s0 * s0) + c * (s1 - c);
  };
  return integral(b, s_lo, s_hi) - integral(a, s_lo, s_hi);
}

std::vector<BandDensity> density_profile(const EmpiricalMeasure& lambda_hat, std::span<const double> band_edges,
                                         double s_lo, double s_hi) {
  if (lambda_hat.dim() != 2) throw std::invalid_argument("density_profile: requires a 2D measure");
  if (band_edges.size() < 2 || !std::is_sorted(band_edges.begin(), band_edges.end()) || band_edges.front() < 0.0)
    throw std::invalid_argument("density_profile: band edges must be sorted, nonnegative, at least two");
  if (!(s_hi > s_lo && s_lo >= 0.0)) throw std::invalid_argument("density_profile: invalid u+v window");
  const std::size_t nb = band_edges.size() - 1;
  std::vector<BandDensity> out(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    out[b] = {band_edges[b], band_edges[b + 1], 0.0, band_area(band_edges[b], band_edges[b + 1], s_lo, s_hi), 0.0, 0,
              false};
  }
  for (std::size_t i = 0; i < lambda_hat.size(); ++i) {
    const double u = lambda_hat.coord(i, 0), v = lambda_hat.coord(i, 1);
    const double s = u + v;
    if (s < s_lo || s > s_hi) continue;
    const double d = std::abs(u - v);
    auto it = std::upper_bound(band_edges.begin(), band_edges.end(), d);
    if (it == band_edges.begin() || it == band_edges.end()) continue;
    const auto b = static_cast<std::size_t>(it - band_edges.begin()) - 1;
    out[b].mass += lambda_hat.weight(i);
    ++out[b].count;
  }
  for (auto& band : out) {
    band.density = band.area > 0.0 ? band.mass / band.area : 0.0;
    band.sparse = band.count < 100;
    if (band.sparse)
      std::clog << "zeronoise: warning: density band [" << band.lo << ", " << band.hi << ") has only " << band.count
                << " samples\n";
  }
  return out;
}

MeanSe sample_mean(std::span<const double> values) {
  MeanSe r;
  r.n = values.size();
  if (r.n == 0) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double x : values) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
  }
  return r;
}

MeanSe batch_means(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < batches) throw std::invalid_argument("batch_means: too few samples");
  const std::size_t len = series.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * len);
    means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) / static_cast<double>(len);
  }
  MeanSe r = sample_mean(means);
  r.n = len * batches;
  return r;
}

TwoEstimators uv_invariant_two_ways(const NoiseParams& p, double T, double dt, RngSpec rng, double burn_in, double u0,
                                    double v0, std::size_t record_every) {
  SdeOptions opts;
  opts.record_every = record_every;
  TwoEstimators out{EmpiricalMeasure(2), EmpiricalMeasure(2), {}, {}};
  out.uv_path = simulate_limit_uv(u0, v0, p, T, dt, rng, opts);
  out.hk_path = simulate_hk(u0, v0, p, T, dt, rng.with_stream(rng.stream + 1), opts);
  out.direct = empirical_from(out.uv_path, burn_in);

  const UVTrajectory& hk = out.hk_path;
  std::vector<double> w;
  std::size_t first = 0;
  while (first < hk.size() && hk.times[first] < burn_in) ++first;
  if (first >= hk.size()) throw std::invalid_argument("uv_invariant_two_ways: no samples after burn_in");
  w.reserve(hk.size() - first);
  double total = 0.0;
  for (std::size_t i = first; i < hk.size(); ++i) {
    w.push_back(1.0 / f_of_ratio(ratio_of(hk.u[i], hk.v[i])));
    total += w.back();
  }
  // Raw weights rescaled to sum to the sample count, so merge() treats
  // the reweighted run like an unweighted one of equal length.
  const double scale = static_cast<double>(w.size()) / total;
  out.weighted.reserve(w.size());
  for (std::size_t i = first; i < hk.size(); ++i) out.weighted.add2(hk.u[i], hk.v[i], w[i - first] * scale);
  return out;
}

void validate_window(const DecompositionWindow& w) {
  if (!(w.half_width > 0.0) || !std::isfinite(w.u_center) || !std::isfinite(w.v_center))
    throw std::invalid_argument("decomposition window: half_width must be > 0 and centre finite");
  if (w.u_center - w.half_width <= 0.0 || w.v_center - w.half_width <= 0.0)
    throw std::invalid_argument("decomposition window must lie inside the open positive quadrant");
  if (std::abs(w.u_center - w.v_center) <= 2.0 * w.half_width)
    throw std::invalid_argument("decomposition window must not meet the diagonal u = v");
}

EmpiricalMeasure nu_samples(double u, double v, std::size_t n_per_sign) {
  if (n_per_sign == 0) throw std::invalid_argument("nu_samples: need at least one point");
  const double tau = period(u, v);
  if (!std::isfinite(tau)) throw std::invalid_argument("nu_samples: (u, v) on the diagonal");
  const double spacing = tau / static_cast<double>(n_per_sign);
  const auto sub = static_cast<std::size_t>(std::ceil(spacing / 1e-3));
  const Trajectory tr = flow(orbit_point(u, v, 1, 0.0), tau, spacing / static_cast<double>(sub), sub);
  EmpiricalMeasure m(3);
  m.reserve(2 * n_per_sign);
  for (std::size_t i = 0; i < n_per_sign && i < tr.size(); ++i) {
    m.add(tr.states[i]);
    m.add(apply_sym_pm(tr.states[i]));
  }
  return m;
}

DecompositionResult decomposition_check(const EmpiricalMeasure& mu_hat, const DecompositionWindow& w,
                                        std::size_t nu_points, std::size_t min_samples) {
  validate_window(w);
  if (mu_hat.dim() != 3) throw std::invalid_argument("decomposition_check: requires a 3D measure");
  EmpiricalMeasure cond(3);
  for (std::size_t i = 0; i < mu_hat.size(); ++i) {
    const auto q = mu_hat.point(i);
    const ConservedPair c = phi(State3{q[0], q[1], q[2]});
    if (std::abs(c.u - w.u_center) <= w.half_width && std::abs(c.v - w.v_center) <= w.half_width)
      cond.add(q, mu_hat.raw_weight(i));
  }
  if (cond.size() < min_samples)
    throw std::runtime_error("decomposition_check: only " + std::to_string(cond.size()) +
                             " samples in window (need " + std::to_string(min_samples) + ")");
  const EmpiricalMeasure nu = nu_samples(w.u_center, w.v_center, nu_points);
  return {sliced_ks(cond, nu), cond.size()};
}

MonteCarloEstimate fast_semigroup(const Observable& phi_fn, const State3& xi, double t, const NoiseParams& p,
                                  std::size_t n_paths, double dt, RngSpec rng) {
  if (!xi.finite() || !(t >= 0.0) || !(dt > 0.0) || n_paths == 0)
    throw std::invalid_argument("fast_semigroup: requires finite xi, t >= 0, dt > 0, n_paths > 0");
  validate_noise(p, false);
  const State3 probes[] = {{0.3, -0.7, 0.2}, {1.1, 0.4, -0.5}, {-0.2, 0.9, 1.3}, xi};
  for (const State3& q : probes) {
    const double a = phi_fn(q), b = phi_fn(apply_sym_pm(q));
    if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a)))
      throw std::invalid_argument("fast_semigroup: observable is not invariant under sym_pm");
  }
  const ConservedPair start = phi(xi);
  if (t == 0.0) {
    const double val = nu_average(phi_fn, start.u, start.v);
    return {val, 0.0, n_paths};
  }
  if (!(start.u > 0.0 && start.v > 0.0))
    throw std::invalid_argument("fast_semigroup: Phi(xi) must be in the open quadrant for t > 0");
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(t / dt - 1e-9)));
  const double h = t / static_cast<double>(n);
  std::vector<double> vals(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    const LimitUvStepper stepper(p, h, rng.with_stream(rng.stream + i));
    double u = start.u, v = start.v;
    for (std::size_t k = 0; k < n; ++k) stepper.step(u, v, k);
    vals[i] = nu_average(phi_fn, std::max(0.0, u), std::max(0.0, v));
  });
  const MeanSe r = sample_mean(vals);
  return {r.mean, r.se, r.n};
}

}  // namespace zeronoise
