#include "zeronoise/studies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zeronoise/averaging.hpp"
#include "zeronoise/ensemble.hpp"

namespace zeronoise {

namespace {

// Independent seed per purpose so that ensembles of different studies never
// share draws even when the caller reuses a seed.
RngSpec derived(const RngSpec& base, std::uint64_t tag) { return {splitmix64(base.seed ^ splitmix64(tag)), base.stream}; }

std::size_t steps_for(double duration, double h) {
  return static_cast<std::size_t>(std::llround(duration / h));
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite and > 0");
}

double rel_drift(double now, double ref) { return std::abs(now - ref) / std::max(std::abs(ref), 1e-300); }

}  // namespace

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ls_slope: need matching sizes >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

ConservationResult conservation_study(std::size_t n_states, double T, double dt, std::uint64_t seed) {
  std::vector<double> drift(n_states, 0.0);
  parallel_for(n_states, [&](std::size_t i) {
    const CounterRng rng({seed, i});
    const State3 xi0{4.0 * rng.uniform(0) - 2.0, 4.0 * rng.uniform(1) - 2.0, 4.0 * rng.uniform(2) - 2.0};
    const ConservedPair ref = phi(xi0);
    const Trajectory tr = flow(xi0, T, dt);
    double d = 0.0;
    for (const State3& s : tr.states) {
      const ConservedPair c = phi(s);
      d = std::max({d, rel_drift(c.u, ref.u), rel_drift(c.v, ref.v)});
    }
    drift[i] = d;
  });
  return {n_states ? *std::max_element(drift.begin(), drift.end()) : 0.0, n_states};
}

double orthogonality_study(std::size_t n, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const CounterRng rng({seed, i});
    const auto g = rng.normals(0);
    const auto h = rng.normals(1);
    const double scale = std::pow(10.0, 6.0 * rng.uniform(2) - 3.0);
    const State3 xi{scale * g[0], scale * g[1], scale * h[0]};
    const double r = std::abs(dot(bilinear(xi, xi), xi)) / std::pow(norm(xi), 3);
    worst = std::max(worst, r);
  }
  return worst;
}

StrongConvergenceResult strong_convergence_study(const StrongConvergenceParams& prm) {
  require_positive(prm.t, "t");
  require_positive(prm.dt, "dt");
  if (prm.eps_list.size() < 2) throw std::invalid_argument("strong_convergence_study: need at least two eps values");
  const std::size_t n = steps_for(prm.t, prm.dt);
  const double h = prm.t / static_cast<double>(n);
  const State3 reference = flow(prm.xi0, prm.t, h).states.back();

  StrongConvergenceResult out;
  std::vector<double> lx, ly;
  for (double eps : prm.eps_list) {
    const NoiseParams p{prm.sigma1, prm.sigma2, eps};
    validate_noise(p, true);
    SdeOptions opts;
    opts.scheme = prm.scheme;
    std::vector<double> sq(prm.n_paths);
    // Same streams for every eps (common random numbers across the sweep).
    parallel_for(prm.n_paths, [&](std::size_t i) {
      const PerturbedStepper st = PerturbedStepper::full(p, h, prm.rng.with_stream(prm.rng.stream + i), opts);
      State3 s = prm.xi0;
      for (std::size_t k = 0; k < n; ++k) s = st.step(s, k);
      sq[i] = norm2(s - reference);
    });
    const MeanSe m = sample_mean(sq);
    out.eps.push_back(eps);
    out.msd.push_back(m.mean);
    out.msd_se.push_back(m.se);
    lx.push_back(std::log(eps));
    ly.push_back(std::log(m.mean));
  }
  out.slope = ls_slope(lx, ly);
  return out;
}

InvariantSample sample_invariant_3d(const FastEnsembleParams& prm) {
  validate_noise(prm.noise, true);
  require_positive(prm.dt_factor, "dt_factor");
  require_positive(prm.spacing, "spacing");
  if (prm.burn_in < 0.0) throw std::invalid_argument("burn_in must be >= 0");
  if (prm.n_paths == 0 || prm.samples_per_path == 0) throw std::invalid_argument("need paths and samples");
  const double h = prm.dt_factor * prm.noise.eps;
  const std::size_t burn = steps_for(prm.burn_in, h);
  const std::size_t gap = std::max<std::size_t>(1, steps_for(prm.spacing, h));
  SdeOptions opts;
  opts.scheme = prm.scheme;

  std::vector<std::vector<State3>> paths(prm.n_paths);
  parallel_for(prm.n_paths, [&](std::size_t i) {
    const PerturbedStepper st = PerturbedStepper::fast(prm.noise, h, prm.rng.with_stream(prm.rng.stream + i), opts);
    State3 s = prm.xi0;
    std::uint64_t k = 0;
    for (; k < burn; ++k) s = st.step(s, k);
    auto& out = paths[i];
    out.reserve(prm.samples_per_path);
    for (std::size_t j = 0; j < prm.samples_per_path; ++j) {
      for (std::size_t g = 0; g < gap; ++g, ++k) s = st.step(s, k);
      out.push_back(s);
    }
  });

  InvariantSample res;
  res.samples_per_path = prm.samples_per_path;
  res.mu.reserve(prm.n_paths * prm.samples_per_path);
  double sum = 0.0, sum_prod = 0.0;
  std::size_t n_s = 0, n_p = 0;
  for (const auto& path : paths) {
    int prev = 0;
    for (const State3& s : path) {
      res.mu.add(s);
      const int sg = sn(s);
      if (sg != 0) {
        sum += sg;
        ++n_s;
        if (prev != 0) {
          sum_prod += sg * prev;
          ++n_p;
        }
      }
      prev = sg;
    }
  }
  if (n_s > 0 && n_p > 0) {
    const double m = sum / static_cast<double>(n_s);
    const double denom = 1.0 - m * m;
    res.sign_autocorrelation = denom > 0.0 ? (sum_prod / static_cast<double>(n_p) - m * m) / denom : 1.0;
  }
  return res;
}

MomentResult moment_study(const MomentParams& prm) {
  require_positive(prm.horizon, "horizon");
  require_positive(prm.dt_factor, "dt_factor");
  if (prm.checkpoints == 0 || prm.n_paths < 2) throw std::invalid_argument("moment_study: need checkpoints and paths");
  MomentResult out;
  for (double eps : prm.eps_list) {
    const NoiseParams p{prm.sigma1, prm.sigma2, eps};
    validate_noise(p, true);
    const double h = prm.dt_factor * eps;
    const std::size_t burn = steps_for(prm.burn_in_fast, h);
    const std::size_t total = steps_for(prm.horizon * eps, h);
    const std::size_t every = std::max<std::size_t>(1, total / prm.checkpoints);
    const std::size_t ncp = total / every + 1;
    SdeOptions opts;
    opts.scheme = Scheme::Splitting;
    std::vector<double> m4(prm.n_paths * ncp), m2(prm.n_paths * ncp);
    parallel_for(prm.n_paths, [&](std::size_t i) {
      const PerturbedStepper st = PerturbedStepper::fast(p, h, prm.rng.with_stream(prm.rng.stream + i), opts);
      State3 s = prm.xi0;
      std::uint64_t k = 0;
      for (; k < burn; ++k) s = st.step(s, k);
      for (std::size_t c = 0; c < ncp; ++c) {
        if (c > 0)
          for (std::size_t g = 0; g < every; ++g, ++k) s = st.step(s, k);
        const double r2 = norm2(s);
        m2[i * ncp + c] = r2;
        m4[i * ncp + c] = r2 * r2;
      }
    });
    double best = -1.0, best_se = 0.0, avg2 = 0.0;
    for (std::size_t c = 0; c < ncp; ++c) {
      std::vector<double> col(prm.n_paths), col2(prm.n_paths);
      for (std::size_t i = 0; i < prm.n_paths; ++i) {
        col[i] = m4[i * ncp + c];
        col2[i] = m2[i * ncp + c];
      }
      const MeanSe r = sample_mean(col);
      avg2 += sample_mean(col2).mean / static_cast<double>(ncp);
      if (r.mean > best) {
        best = r.mean;
        best_se = r.se;
      }
    }
    out.eps.push_back(eps);
    out.sup_m4.push_back(best);
    out.sup_m4_se.push_back(best_se);
    out.mean_m2.push_back(avg2);
  }
  const auto [mn, mx] = std::minmax_element(out.sup_m4.begin(), out.sup_m4.end());
  out.relative_spread = (*mx - *mn) / *mn;
  return out;
}

QvResult qv_study(const QvParams& prm) {
  require_positive(prm.t, "t");
  require_positive(prm.limit_dt, "limit_dt");
  require_positive(prm.dt_factor, "dt_factor");
  QvResult out;
  const ConservedPair start = phi(prm.xi0);
  if (!(start.u > 0.0 && start.v > 0.0)) throw std::invalid_argument("qv_study: Phi(xi0) must be positive");

  {
    const NoiseParams p{prm.sigma1, prm.sigma2, 0.0};
    validate_noise(p, false);
    const std::size_t n = steps_for(prm.t, prm.limit_dt);
    const double h = prm.t / static_cast<double>(n);
    const RngSpec base = derived(prm.rng, 0x51u);
    out.limit_samples.assign(prm.n_paths, 0.0);
    parallel_for(prm.n_paths, [&](std::size_t i) {
      const LimitUvStepper st(p, h, base.with_stream(base.stream + i));
      double u = start.u, v = start.v;
      double prev = 0.5 * (u - gamma_fn(u, v));
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        st.step(u, v, k);
        const double up = std::max(0.0, u), vp = std::max(0.0, v);
        const double cur = 0.5 * (up - gamma_fn(up, vp));
        acc += 0.5 * (prev + cur) * h;
        prev = cur;
      }
      out.limit_samples[i] = acc / prm.t;
    });
    out.mean_limit = sample_mean(out.limit_samples).mean;
  }

  for (double eps : prm.eps_list) {
    const NoiseParams p{prm.sigma1, prm.sigma2, eps};
    validate_noise(p, true);
    const double h0 = prm.dt_factor * eps;
    const std::size_t n = std::max<std::size_t>(1, steps_for(prm.t, h0));
    const double h = prm.t / static_cast<double>(n);
    SdeOptions opts;
    opts.scheme = Scheme::Splitting;
    const RngSpec base = derived(prm.rng, 0x52u);
    std::vector<double> vals(prm.n_paths);
    parallel_for(prm.n_paths, [&](std::size_t i) {
      const PerturbedStepper st = PerturbedStepper::fast(p, h, base.with_stream(base.stream + i), opts);
      QvAccumulator acc(h);
      State3 s = prm.xi0;
      acc.push(s.x);
      for (std::size_t k = 0; k < n; ++k) {
        s = st.step(s, k);
        acc.push(s.x);
      }
      vals[i] = acc.value() / prm.t;
    });
    out.eps.push_back(eps);
    out.ks_to_limit.push_back(ks_two_sample(vals, out.limit_samples));
    out.mean_fast.push_back(sample_mean(vals).mean);
    out.fast_samples.push_back(std::move(vals));
  }
  return out;
}

DiagonalResult diagonal_study(const DiagonalParams& prm) {
  validate_noise(prm.noise, false);
  require_positive(prm.T, "T");
  require_positive(prm.dt, "dt");
  if (prm.burn_in >= prm.T) throw std::invalid_argument("burn_in must be < T");
  const std::size_t n = steps_for(prm.T, prm.dt);
  const std::size_t burn = steps_for(prm.burn_in, prm.dt);
  const std::size_t nd = prm.deltas.size();
  std::vector<std::vector<std::uint64_t>> hits(prm.n_paths, std::vector<std::uint64_t>(nd, 0));
  parallel_for(prm.n_paths, [&](std::size_t i) {
    const LimitUvStepper st(prm.noise, prm.dt, prm.rng.with_stream(prm.rng.stream + i));
    double u = prm.u0, v = prm.v0;
    for (std::size_t k = 0; k < n; ++k) {
      st.step(u, v, k);
      if (k + 1 < burn) continue;
      const double d = std::abs(std::max(0.0, u) - std::max(0.0, v));
      for (std::size_t j = 0; j < nd; ++j)
        if (d <= prm.deltas[j]) ++hits[i][j];
    }
  });
  DiagonalResult out;
  out.deltas = prm.deltas;
  out.samples = prm.n_paths * (n - std::min(n, burn > 0 ? burn - 1 : 0));
  for (std::size_t j = 0; j < nd; ++j) {
    std::uint64_t h = 0;
    for (const auto& row : hits) h += row[j];
    out.fraction.push_back(static_cast<double>(h) / static_cast<double>(out.samples));
  }
  return out;
}

PositivityResult positivity_study(const NoiseParams& p, double dt, std::size_t n_paths, std::size_t steps_per_path,
                                  RngSpec rng) {
  validate_noise(p, false);
  require_positive(dt, "dt");
  struct Slot {
    std::uint64_t neg = 0, bad = 0, rej = 0;
    double min_a = INFINITY, min_b = INFINITY;
  };
  std::vector<Slot> slots(2 * n_paths);
  parallel_for(2 * n_paths, [&](std::size_t task) {
    Slot& s = slots[task];
    const std::size_t i = task / 2;
    auto record = [&](double a, double b) {
      a = std::max(0.0, a);  // reported state
      b = std::max(0.0, b);
      if (!std::isfinite(a) || !std::isfinite(b)) ++s.bad;
      if (a < 0.0 || b < 0.0) ++s.neg;
      s.min_a = std::min(s.min_a, a);
      s.min_b = std::min(s.min_b, b);
    };
    // Start near the axes where positivity is most at risk.
    double a = 0.05 + 0.1 * static_cast<double>(i % 7), b = 0.3 + 0.2 * static_cast<double>(i % 5);
    if (task % 2 == 0) {
      const LimitUvStepper st(p, dt, derived(rng, 0x60u).with_stream(rng.stream + i));
      for (std::size_t k = 0; k < steps_per_path; ++k) {
        st.step(a, b, k);
        record(a, b);
      }
    } else {
      const HkStepper st(p, dt, derived(rng, 0x61u).with_stream(rng.stream + i));
      for (std::size_t k = 0; k < steps_per_path; ++k) {
        st.step(a, b, k);
        record(a, b);
      }
      s.rej = st.rejections();
    }
  });
  PositivityResult out;
  out.min_u = out.min_v = out.min_h = out.min_k = INFINITY;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    out.steps += steps_per_path;
    out.negative += slots[t].neg;
    out.nonfinite += slots[t].bad;
    out.hk_rejections += slots[t].rej;
    if (t % 2 == 0) {
      out.min_u = std::min(out.min_u, slots[t].min_a);
      out.min_v = std::min(out.min_v, slots[t].min_b);
    } else {
      out.min_h = std::min(out.min_h, slots[t].min_a);
      out.min_k = std::min(out.min_k, slots[t].min_b);
    }
  }
  return out;
}

TwoEstimatorResult two_estimator_study(const TwoEstimatorParams& prm) {
  if (prm.batches < 2) throw std::invalid_argument("two_estimator_study: need at least two batches");
  const TwoEstimators est = uv_invariant_two_ways(prm.noise, prm.T, prm.dt, prm.rng, prm.burn_in, prm.u0, prm.v0);
  using Stat = double (*)(double, double);
  const std::pair<const char*, Stat> stats[] = {
      {"mean_u", [](double u, double) { return u; }},
      {"mean_v", [](double, double v) { return v; }},
      {"prob_u_gt_v", [](double u, double v) { return u > v ? 1.0 : 0.0; }},
  };

  auto batched = [&](const EmpiricalMeasure& m, Stat f) {
    const std::size_t len = m.size() / prm.batches;
    std::vector<double> ratios(prm.batches);
    for (std::size_t b = 0; b < prm.batches; ++b) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = b * len; i < (b + 1) * len; ++i) {
        num += m.raw_weight(i) * f(m.coord(i, 0), m.coord(i, 1));
        den += m.raw_weight(i);
      }
      ratios[b] = num / den;
    }
    MeanSe r = sample_mean(ratios);
    double num = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) num += m.raw_weight(i) * f(m.coord(i, 0), m.coord(i, 1));
    r.mean = num / m.total_raw_weight();
    r.n = m.size();
    return r;
  };

  TwoEstimatorResult out;
  for (const auto& [name, f] : stats) {
    EstimatorComparison row;
    row.statistic = name;
    row.direct = batched(est.direct, f);
    row.weighted = batched(est.weighted, f);
    const double comb = std::hypot(row.direct.se, row.weighted.se);
    row.z = comb > 0.0 ? std::abs(row.direct.mean - row.weighted.mean) / comb : 0.0;
    out.rows.push_back(row);
  }
  out.weighted_normalisation = est.weighted.expect([](std::span<const double>) { return 1.0; });
  return out;
}

DensityResult density_study(const DensityParams& prm) {
  validate_noise(prm.noise, false);
  SdeOptions opts;
  opts.record_every = prm.record_every;
  std::vector<EmpiricalMeasure> parts(prm.n_paths, EmpiricalMeasure(2));
  parallel_for(prm.n_paths, [&](std::size_t i) {
    const UVTrajectory tr =
        simulate_limit_uv(prm.u0, prm.v0, prm.noise, prm.T, prm.dt, prm.rng.with_stream(prm.rng.stream + i), opts);
    parts[i] = empirical_from(tr, prm.burn_in);
  });
  const EmpiricalMeasure lam = EmpiricalMeasure::merged(parts);
  DensityResult out;
  out.bands = density_profile(lam, prm.band_edges, prm.s_lo, prm.s_hi);
  out.increasing_toward_diagonal = true;
  for (std::size_t b = 1; b < out.bands.size(); ++b)
    if (!(out.bands[b - 1].density > out.bands[b].density)) out.increasing_toward_diagonal = false;
  return out;
}

SymmetryResult symmetry_study(const SymmetryParams& prm) {
  FastEnsembleParams eq = prm.base;
  eq.noise.sigma1 = eq.noise.sigma2 = prm.sigma_equal;
  const InvariantSample a = sample_invariant_3d(eq);

  FastEnsembleParams ne = prm.base;
  ne.noise.sigma1 = prm.sigma_equal;
  ne.noise.sigma2 = prm.sigma2_unequal;
  ne.rng = derived(prm.base.rng, 0x70u);
  const InvariantSample b = sample_invariant_3d(ne);

  SymmetryResult out;
  out.samples = a.mu.size();
  out.defect_pm = symmetry_defect(a.mu, Symmetry::PM);
  out.critical_pm = symmetry_critical_value(prm.alpha, static_cast<double>(a.mu.size()), Symmetry::PM);
  out.defect_e_equal = symmetry_defect(a.mu, Symmetry::E);
  out.defect_e_unequal = symmetry_defect(b.mu, Symmetry::E);
  out.sign_autocorrelation = a.sign_autocorrelation;
  return out;
}

TightnessResult tightness_study(const FastEnsembleParams& prm, const std::vector<double>& deltas) {
  const InvariantSample s = sample_invariant_3d(prm);
  const EmpiricalMeasure lam = push_phi(s.mu);
  TightnessResult out;
  out.deltas = deltas;
  out.samples = lam.size();
  const std::size_t per = s.samples_per_path;
  for (double d : deltas) {
    if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("tightness_study: deltas must lie in (0, 1)");
    std::vector<double> per_path(prm.n_paths, 0.0);
    for (std::size_t p = 0; p < prm.n_paths; ++p) {
      std::size_t hit = 0;
      for (std::size_t i = p * per; i < (p + 1) * per; ++i)
        if (lam.coord(i, 0) + lam.coord(i, 1) < d) ++hit;
      per_path[p] = static_cast<double>(hit) / static_cast<double>(per);
    }
    const MeanSe m = sample_mean(per_path);
    const double scale = std::abs(std::log(d));
    out.mass.push_back(small_mass(lam, d));
    out.mass_se.push_back(m.se);
    out.scaled.push_back(out.mass.back() * scale);
    out.scaled_se.push_back(m.se * scale);
  }
  out.no_growth = true;
  for (std::size_t j = 1; j < out.scaled.size(); ++j) {
    const double tol = 3.0 * std::hypot(out.scaled_se[j], out.scaled_se[j - 1]);
    if (out.scaled[j] > out.scaled[j - 1] + tol) out.no_growth = false;
  }
  return out;
}

DecompositionStudyResult decomposition_study(const FastEnsembleParams& base, const std::vector<double>& eps_list,
                                             const DecompositionWindow& w, std::size_t nu_points) {
  validate_window(w);
  DecompositionStudyResult out;
  for (double eps : eps_list) {
    FastEnsembleParams prm = base;
    prm.noise.eps = eps;
    const InvariantSample s = sample_invariant_3d(prm);
    const DecompositionResult r = decomposition_check(s.mu, w, nu_points);
    out.eps.push_back(eps);
    out.distance.push_back(r.distance);
    out.conditional_samples.push_back(r.conditional_samples);
  }
  return out;
}

}  // namespace zeronoise
