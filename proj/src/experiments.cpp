#include "zeronoise/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "zeronoise/averaging.hpp"
#include "zeronoise/ensemble.hpp"
#include "zeronoise/studies.hpp"

namespace zeronoise {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::vector<Violation>& v) {
  std::string s = "invalid config:";
  for (const auto& x : v) s += " [" + x.field + ": " + x.constraint + "]";
  return s;
}

// Typed access to "params". Missing or malformed values are recorded as
// violations and a placeholder is returned, so a whole config is checked
// in one pass.
class Reader {
 public:
  Reader(const json& params, std::vector<Violation>& out) : p_(params), out_(out) {}

  void fail(const std::string& field, const std::string& what) { out_.push_back({field, what}); }

  bool has(const std::string& key) const { return p_.contains(key); }

  double number(const std::string& key) {
    seen_.insert(key);
    if (!p_.contains(key)) {
      fail(key, "required (no default)");
      return std::nan("");
    }
    return as_number(key, p_.at(key));
  }

  double number(const std::string& key, double def) {
    seen_.insert(key);
    return p_.contains(key) ? as_number(key, p_.at(key)) : def;
  }

  double positive(const std::string& key) {
    const double x = number(key);
    if (std::isfinite(x) && !(x > 0.0)) fail(key, "must be > 0");
    return x;
  }

  double positive(const std::string& key, double def) {
    const double x = number(key, def);
    if (std::isfinite(x) && !(x > 0.0)) fail(key, "must be > 0");
    return x;
  }

  std::uint64_t count(const std::string& key, std::uint64_t def, std::uint64_t min = 1) {
    seen_.insert(key);
    if (!p_.contains(key)) return def;
    const json& j = p_.at(key);
    if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
      fail(key, "must be an integer >= " + std::to_string(min));
      return def;
    }
    return j.get<std::uint64_t>();
  }

  /// A number or a non-empty list of numbers.
  std::vector<double> numbers(const std::string& key, bool required = true, std::vector<double> def = {}) {
    seen_.insert(key);
    if (!p_.contains(key)) {
      if (required) fail(key, "required (no default)");
      return def;
    }
    const json& j = p_.at(key);
    if (j.is_number()) return {j.get<double>()};
    std::vector<double> out;
    if (!j.is_array() || j.empty()) {
      fail(key, "must be a number or a non-empty list of numbers");
      return out;
    }
    for (const auto& e : j) {
      if (!e.is_number()) {
        fail(key, "list entries must be numbers");
        return {};
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  State3 state(const std::string& key) {
    seen_.insert(key);
    if (!p_.contains(key)) {
      fail(key, "required (no default)");
      return {};
    }
    const json& j = p_.at(key);
    if (!j.is_array() || j.size() != 3 || !std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); })) {
      fail(key, "must be a list of three numbers");
      return {};
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    seen_.insert(key);
    if (!p_.contains(key)) return def;
    const json& j = p_.at(key);
    if (!j.is_string() || std::find(allowed.begin(), allowed.end(), j.get<std::string>()) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      fail(key, "must be one of " + opts);
      return def;
    }
    return j.get<std::string>();
  }

  std::string text(const std::string& key) {
    seen_.insert(key);
    if (!p_.contains(key) || !p_.at(key).is_string()) {
      fail(key, "required string");
      return {};
    }
    return p_.at(key).get<std::string>();
  }

  const json* object(const std::string& key) {
    seen_.insert(key);
    if (!p_.contains(key)) {
      fail(key, "required (no default)");
      return nullptr;
    }
    if (!p_.at(key).is_object()) {
      fail(key, "must be an object");
      return nullptr;
    }
    return &p_.at(key);
  }

  void reject_unknown() {
    for (const auto& [k, v] : p_.items()) {
      (void)v;
      if (!seen_.count(k)) fail(k, "unknown parameter");
    }
  }

 private:
  double as_number(const std::string& key, const json& j) {
    if (!j.is_number()) {
      fail(key, "must be a number");
      return std::nan("");
    }
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  const json& p_;
  std::vector<Violation>& out_;
  std::set<std::string> seen_;
};

// --- shared parameter groups ----------------------------------------------

NoiseParams read_sigma(Reader& r) {
  NoiseParams p;
  p.sigma1 = r.number("sigma1");
  p.sigma2 = r.number("sigma2");
  for (const auto& [key, val] : {std::pair{"sigma1", p.sigma1}, std::pair{"sigma2", p.sigma2}})
    if (std::isfinite(val) && !(val > 0.0)) r.fail(key, "must be > 0 (standing assumption sigma1 > 0 and sigma2 > 0)");
  return p;
}

double read_horizon(Reader& r, const std::string& key = "T") {
  const double t = r.number(key);
  if (std::isfinite(t) && t < 0.0) r.fail(key, "must not be negative");
  else if (std::isfinite(t) && t == 0.0) r.fail(key, "must be > 0");
  return t;
}

std::vector<double> read_eps_list(Reader& r, bool strictly_positive) {
  std::vector<double> eps = r.numbers("eps");
  for (double e : eps) {
    if (!std::isfinite(e) || (strictly_positive ? !(e > 0.0) : e < 0.0)) {
      r.fail("eps", strictly_positive ? "every entry must be > 0" : "every entry must be >= 0");
      break;
    }
  }
  return eps;
}

RngSpec read_rng(Reader& r) {
  RngSpec s;
  s.seed = r.count("seed", 0, 0);
  s.stream = r.count("stream", 0, 0);
  return s;
}

Scheme read_scheme(Reader& r, const std::string& def) {
  return r.choice("scheme", def, {"em", "splitting"}) == "em" ? Scheme::EulerMaruyama : Scheme::Splitting;
}

double read_burn_in(Reader& r, double horizon) {
  const double b = r.number("burn_in", std::isfinite(horizon) ? 0.2 * horizon : 0.0);
  if (std::isfinite(b) && b < 0.0) r.fail("burn_in", "must not be negative");
  if (std::isfinite(b) && std::isfinite(horizon) && b >= horizon) r.fail("burn_in", "must be below the horizon");
  return b;
}

void read_uv_start(Reader& r, double& u0, double& v0) {
  u0 = r.number("u0");
  v0 = r.number("v0");
  if (std::isfinite(u0) && !(u0 > 0.0)) r.fail("u0", "must be > 0");
  if (std::isfinite(v0) && !(v0 > 0.0)) r.fail("v0", "must be > 0");
}

void read_dt_factor(Reader& r, double& f) {
  f = r.positive("dt_factor", 0.1);
  if (std::isfinite(f) && f > 0.1) r.fail("dt_factor", "fast-time step dt_factor * eps must satisfy dt <= 0.1 eps");
}

FastEnsembleParams read_fast_ensemble(Reader& r) {
  FastEnsembleParams f;
  read_dt_factor(r, f.dt_factor);
  f.xi0 = r.state("xi0");
  f.burn_in = r.number("burn_in");
  if (std::isfinite(f.burn_in) && f.burn_in < 0.0) r.fail("burn_in", "must not be negative");
  f.n_paths = r.count("n_paths", 0);
  if (!r.has("n_paths")) r.fail("n_paths", "required (no default)");
  f.samples_per_path = r.count("samples_per_path", 1000);
  f.spacing = r.positive("spacing");
  f.scheme = read_scheme(r, "splitting");
  f.rng = read_rng(r);
  return f;
}

std::string eps_tag(double e) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%g", e);
  return buf.data();
}

// --- execution context ------------------------------------------------------

struct Context {
  fs::path dir;
  std::vector<std::string> outputs;
  std::vector<Diagnostic> diagnostics;
  std::vector<SeedRecord> seeds;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return dir / name;
  }
  void diag(const std::string& name, double value, std::size_t n = 0, double se = std::nan("")) {
    diagnostics.push_back({name, value, n, se});
  }
  void seed(const std::string& label, const RngSpec& s) { seeds.push_back({label, s.seed, s.stream}); }
};

using Job = std::function<void(Context&)>;
using Planner = Job (*)(Reader&);

// --- experiments ------------------------------------------------------------

Job plan_flow(Reader& r) {
  const State3 xi0 = r.state("xi0");
  const double T = read_horizon(r);
  const double dt = r.positive("dt", 1e-3);
  const std::size_t every = r.count("record_every", 1);
  return [=](Context& c) {
    const Trajectory tr = flow(xi0, T, dt, every);
    write_trajectory_csv(c.file("trajectory.csv"), tr);
    const ConservedPair ref = phi(xi0);
    double du = 0.0, dv = 0.0;
    for (const State3& s : tr.states) {
      const ConservedPair q = phi(s);
      du = std::max(du, std::abs(q.u - ref.u));
      dv = std::max(dv, std::abs(q.v - ref.v));
    }
    c.diag("max_abs_drift_u", du, tr.size());
    c.diag("max_abs_drift_v", dv, tr.size());
    if (ref.u > 0.0 && ref.v > 0.0) c.diag("period", period(ref.u, ref.v));
  };
}

Job plan_avg_table(Reader& r) {
  std::vector<double> grid;
  if (r.has("r")) {
    grid = r.numbers("r");
    for (double x : grid)
      if (!(x >= 0.0 && x <= 1.0)) {
        r.fail("r", "entries must lie in [0, 1]");
        break;
      }
  } else {
    const std::size_t n = r.count("n_r", 101, 2);
    for (std::size_t i = 0; i < n; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return [=](Context& c) {
    CsvWriter w(c.file("avg_table.csv"), {"r", "lambda", "gamma", "f", "g", "k_r"});
    for (double x : grid) {
      const double lam = lambda_fn(x);
      const double f = f_of_ratio(x);
      const double g = x >= 0.5 ? 1.0 : (1.0 - lam) / f_floor();
      const double kr = x == 1.0 ? 0.0 : 1.0 / (4.0 * elliptic_ke(x).K);
      // gamma column is for max(u, v) = 1
      w.row({x, lam, x * lam, f, g, kr});
    }
    w.close();
    c.diag("lambda_at_0", lambda_fn(0.0));
    c.diag("lambda_at_1", lambda_fn(1.0));
    c.diag("f_floor", f_floor());
  };
}

template <bool Fast>
Job plan_sde(Reader& r) {
  NoiseParams p = read_sigma(r);
  const std::vector<double> eps = read_eps_list(r, Fast);
  const double T = read_horizon(r);
  const double dt = r.positive("dt");
  if (Fast && std::isfinite(dt))
    for (double e : eps)
      if (e > 0.0 && dt > 0.1 * e) {
        r.fail("dt", "fast-sde requires dt <= 0.1 eps (violated at eps = " + eps_tag(e) + ")");
        break;
      }
  const State3 xi0 = r.state("xi0");
  const std::size_t n_paths = r.count("n_paths", 1);
  SdeOptions opts;
  opts.scheme = read_scheme(r, Fast ? "splitting" : "em");
  opts.record_every = r.count("record_every", 1);
  const RngSpec rng = read_rng(r);
  return [=](Context& c) {
    const std::string prefix = Fast ? "fast" : "full";
    CsvWriter summary(c.file("summary.csv"), {"eps", "path", "t", "x", "y", "z", "u", "v"});
    for (std::size_t k = 0; k < eps.size(); ++k) {
      NoiseParams q = p;
      q.eps = eps[k];
      std::vector<Trajectory> paths(n_paths);
      parallel_for(n_paths, [&](std::size_t i) {
        const RngSpec s = rng.with_stream(rng.stream + i);
        paths[i] = Fast ? simulate_fast(xi0, q, T, dt, s, opts) : simulate_full(xi0, q, T, dt, s, opts);
      });
      for (std::size_t i = 0; i < n_paths; ++i) {
        write_trajectory_csv(c.file(prefix + "_eps_" + eps_tag(eps[k]) + "_path_" + std::to_string(i) + ".csv"),
                             paths[i]);
        const State3& e = paths[i].states.back();
        const ConservedPair uv = phi(e);
        summary.row({eps[k], static_cast<double>(i), paths[i].times.back(), e.x, e.y, e.z, uv.u, uv.v});
      }
      double m2 = 0.0;
      for (const auto& tr : paths) m2 += norm2(tr.states.back());
      c.diag(prefix + "_mean_sq_norm_end_eps_" + eps_tag(eps[k]), m2 / static_cast<double>(n_paths), n_paths);
    }
    summary.close();
    for (std::size_t i = 0; i < n_paths; ++i) c.seed("path " + std::to_string(i), rng.with_stream(rng.stream + i));
  };
}

template <bool Hk>
Job plan_uv(Reader& r) {
  const NoiseParams p = read_sigma(r);
  double u0 = 0.0, v0 = 0.0;
  read_uv_start(r, u0, v0);
  if (Hk && std::isfinite(u0) && std::isfinite(v0) && near_diagonal(u0, v0))
    r.fail("u0", "time-changed system cannot start on the diagonal h = k");
  const double T = read_horizon(r);
  const double dt = r.positive("dt");
  const double burn = read_burn_in(r, T);
  SdeOptions opts;
  opts.record_every = r.count("record_every", 1);
  const bool change = r.choice("time_change", "none", {"none", "apply"}) == "apply";
  const std::vector<double> deltas = r.numbers("deltas", false, {0.1, 0.03, 0.01, 0.003});
  const RngSpec rng = read_rng(r);
  return [=](Context& c) {
    c.seed(Hk ? "hk" : "limit-uv", rng);
    const UVTrajectory tr = Hk ? simulate_hk(u0, v0, p, T, dt, rng, opts) : simulate_limit_uv(u0, v0, p, T, dt, rng, opts);
    write_uv_csv(c.file(Hk ? "hk.csv" : "uv.csv"), tr, Hk ? "h" : "u", Hk ? "k" : "v");
    if (change) {
      const auto [out, map] = Hk ? time_change_inverse(tr) : time_change_forward(tr);
      write_uv_csv(c.file(Hk ? "uv_from_hk.csv" : "hk_from_uv.csv"), out, Hk ? "u" : "h", Hk ? "v" : "k");
      CsvWriter w(c.file("time_change.csv"), {"s", "a"});
      for (std::size_t i = 0; i < map.s_grid.size(); ++i) w.row({map.s_grid[i], map.a_values[i]});
      w.close();
    }
    double mn_u = tr.u.empty() ? 0.0 : *std::min_element(tr.u.begin(), tr.u.end());
    double mn_v = tr.v.empty() ? 0.0 : *std::min_element(tr.v.begin(), tr.v.end());
    c.diag(Hk ? "min_h" : "min_u", mn_u, tr.size());
    c.diag(Hk ? "min_k" : "min_v", mn_v, tr.size());
    for (double d : deltas) c.diag("diag_occupation_delta_" + eps_tag(d), diag_occupation(tr, d, burn), tr.size());
    const EmpiricalMeasure m = empirical_from(tr, burn);
    std::vector<double> us, vs;
    for (std::size_t i = 0; i < m.size(); ++i) {
      us.push_back(m.coord(i, 0));
      vs.push_back(m.coord(i, 1));
    }
    const MeanSe mu = batch_means(us), mv = batch_means(vs);
    c.diag(Hk ? "mean_h" : "mean_u", mu.mean, mu.n, mu.se);
    c.diag(Hk ? "mean_k" : "mean_v", mv.mean, mv.n, mv.se);
  };
}

Job plan_qv(Reader& r) {
  QvParams q;
  const NoiseParams p = read_sigma(r);
  q.sigma1 = p.sigma1;
  q.sigma2 = p.sigma2;
  q.eps_list = read_eps_list(r, true);
  q.t = read_horizon(r);
  q.xi0 = r.state("xi0");
  q.n_paths = r.count("n_paths", 500, 2);
  read_dt_factor(r, q.dt_factor);
  q.limit_dt = r.positive("limit_dt", 1e-3);
  q.rng = read_rng(r);
  return [=](Context& c) {
    c.seed("qv-study", q.rng);
    const QvResult res = qv_study(q);
    CsvWriter s(c.file("summary.csv"), {"eps", "ks_to_limit", "mean_fast", "mean_limit"});
    for (std::size_t k = 0; k < res.eps.size(); ++k) {
      s.row({res.eps[k], res.ks_to_limit[k], res.mean_fast[k], res.mean_limit});
      CsvWriter w(c.file("qv_eps_" + eps_tag(res.eps[k]) + ".csv"), {"path", "value"});
      for (std::size_t i = 0; i < res.fast_samples[k].size(); ++i) w.row({static_cast<double>(i), res.fast_samples[k][i]});
      w.close();
      c.diag("ks_to_limit_eps_" + eps_tag(res.eps[k]), res.ks_to_limit[k], q.n_paths);
    }
    s.close();
    CsvWriter w(c.file("qv_limit.csv"), {"path", "value"});
    for (std::size_t i = 0; i < res.limit_samples.size(); ++i) w.row({static_cast<double>(i), res.limit_samples[i]});
    w.close();
  };
}

Job plan_convergence(Reader& r) {
  StrongConvergenceParams q;
  const NoiseParams p = read_sigma(r);
  q.sigma1 = p.sigma1;
  q.sigma2 = p.sigma2;
  q.eps_list = read_eps_list(r, true);
  if (q.eps_list.size() < 2) r.fail("eps", "need at least two values for a slope");
  q.t = read_horizon(r);
  q.dt = r.positive("dt");
  q.xi0 = r.state("xi0");
  q.n_paths = r.count("n_paths", 1000, 2);
  q.scheme = read_scheme(r, "em");
  q.rng = read_rng(r);
  return [=](Context& c) {
    c.seed("convergence-study", q.rng);
    const StrongConvergenceResult res = strong_convergence_study(q);
    CsvWriter w(c.file("summary.csv"), {"eps", "msd", "msd_se"});
    for (std::size_t k = 0; k < res.eps.size(); ++k) {
      w.row({res.eps[k], res.msd[k], res.msd_se[k]});
      c.diag("msd_eps_" + eps_tag(res.eps[k]), res.msd[k], q.n_paths, res.msd_se[k]);
    }
    w.close();
    c.diag("loglog_slope", res.slope, res.eps.size());
  };
}

Job plan_invariant_3d(Reader& r) {
  FastEnsembleParams f = read_fast_ensemble(r);
  const NoiseParams p = read_sigma(r);
  f.noise.sigma1 = p.sigma1;
  f.noise.sigma2 = p.sigma2;
  const std::vector<double> eps = read_eps_list(r, true);
  const std::vector<double> deltas = r.numbers("deltas", false, {0.1, 0.01, 0.001});
  return [=](Context& c) {
    c.seed("invariant-3d", f.rng);
    CsvWriter s(c.file("summary.csv"),
                {"eps", "samples", "mean_sq_norm", "mean_z2", "defect_pm", "defect_e", "critical_pm", "sign_acf"});
    for (double e : eps) {
      FastEnsembleParams q = f;
      q.noise.eps = e;
      const InvariantSample smp = sample_invariant_3d(q);
      const std::string tag = eps_tag(e);
      write_measure_csv(c.file("measure_eps_" + tag + ".csv"), smp.mu);
      write_histogram_csv(c.file("hist_z_eps_" + tag + ".csv"),
                          smp.mu.histogram([](std::span<const double> x) { return x[2]; }));
      const double n = static_cast<double>(smp.mu.size());
      const double m2 = smp.mu.expect([](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; });
      const double z2 = smp.mu.expect([](std::span<const double> x) { return x[2] * x[2]; });
      const double dpm = symmetry_defect(smp.mu, Symmetry::PM);
      const double de = symmetry_defect(smp.mu, Symmetry::E);
      const double crit = symmetry_critical_value(0.01, n, Symmetry::PM);
      s.row({e, n, m2, z2, dpm, de, crit, smp.sign_autocorrelation});
      c.diag("defect_pm_eps_" + tag, dpm, smp.mu.size());
      c.diag("defect_e_eps_" + tag, de, smp.mu.size());
      const EmpiricalMeasure lam = push_phi(smp.mu);
      for (double d : deltas)
        c.diag("small_mass_x_abs_log_delta_" + eps_tag(d) + "_eps_" + tag, small_mass(lam, d) * std::abs(std::log(d)),
               smp.mu.size());
    }
    s.close();
  };
}

Job plan_invariant_uv(Reader& r) {
  DensityParams d;
  d.noise = read_sigma(r);
  read_uv_start(r, d.u0, d.v0);
  d.T = read_horizon(r);
  d.dt = r.positive("dt");
  d.burn_in = read_burn_in(r, d.T);
  d.n_paths = r.count("n_paths", 1);
  d.record_every = r.count("record_every", 10);
  d.band_edges = r.numbers("band_edges", false, d.band_edges);
  if (d.band_edges.size() < 2 || !std::is_sorted(d.band_edges.begin(), d.band_edges.end()))
    r.fail("band_edges", "need at least two increasing edges");
  d.s_lo = r.number("s_lo", 1.0);
  d.s_hi = r.number("s_hi", 4.0);
  if (!(d.s_hi > d.s_lo && d.s_lo >= 0.0)) r.fail("s_hi", "window needs 0 <= s_lo < s_hi");
  d.rng = read_rng(r);
  return [=](Context& c) {
    c.seed("invariant-uv", d.rng);
    std::vector<EmpiricalMeasure> parts(d.n_paths, EmpiricalMeasure(2));
    SdeOptions opts;
    opts.record_every = d.record_every;
    parallel_for(d.n_paths, [&](std::size_t i) {
      const UVTrajectory tr = simulate_limit_uv(d.u0, d.v0, d.noise, d.T, d.dt, d.rng.with_stream(d.rng.stream + i), opts);
      parts[i] = empirical_from(tr, d.burn_in);
    });
    const EmpiricalMeasure lam = EmpiricalMeasure::merged(parts);
    write_measure_csv(c.file("measure_uv.csv"), lam);
    write_histogram_csv(c.file("hist_u_minus_v.csv"),
                        lam.histogram([](std::span<const double> x) { return x[0] - x[1]; }));
    const auto bands = density_profile(lam, d.band_edges, d.s_lo, d.s_hi);
    CsvWriter w(c.file("bands.csv"), {"lo", "hi", "mass", "area", "density", "count"});
    for (const auto& b : bands) {
      w.row({b.lo, b.hi, b.mass, b.area, b.density, static_cast<double>(b.count)});
      c.diag("band_density_" + eps_tag(b.lo) + "_" + eps_tag(b.hi), b.density, b.count);
    }
    w.close();
    c.diag("mean_u", lam.expect([](std::span<const double> x) { return x[0]; }), lam.size());
    c.diag("mean_v", lam.expect([](std::span<const double> x) { return x[1]; }), lam.size());
  };
}

Job plan_two_estimators(Reader& r) {
  TwoEstimatorParams q;
  q.noise = read_sigma(r);
  read_uv_start(r, q.u0, q.v0);
  q.T = read_horizon(r);
  q.dt = r.positive("dt");
  q.burn_in = read_burn_in(r, q.T);
  q.batches = r.count("batches", 25, 2);
  q.rng = read_rng(r);
  return [=](Context& c) {
    c.seed("limit-uv", q.rng);
    c.seed("hk", q.rng.with_stream(q.rng.stream + 1));
    const TwoEstimatorResult res = two_estimator_study(q);
    CsvWriter w(c.file("estimators.csv"), {"statistic", "direct", "direct_se", "weighted", "weighted_se", "z"});
    for (const auto& row : res.rows) {
      const std::array<double, 5> v{row.direct.mean, row.direct.se, row.weighted.mean, row.weighted.se, row.z};
      w.row(row.statistic, v);
      c.diag("z_" + row.statistic, row.z, row.direct.n);
    }
    w.close();
    c.diag("weighted_normalisation", res.weighted_normalisation);
  };
}

Job plan_decomposition(Reader& r) {
  FastEnsembleParams f = read_fast_ensemble(r);
  const NoiseParams p = read_sigma(r);
  f.noise.sigma1 = p.sigma1;
  f.noise.sigma2 = p.sigma2;
  const std::vector<double> eps = read_eps_list(r, true);
  DecompositionWindow w{std::nan(""), std::nan(""), std::nan("")};
  if (const json* win = r.object("window")) {
    std::vector<Violation> sub;
    Reader wr(*win, sub);
    w.u_center = wr.positive("u");
    w.v_center = wr.positive("v");
    w.half_width = wr.positive("half_width");
    wr.reject_unknown();
    for (auto& v : sub) r.fail("window." + v.field, v.constraint);
    if (sub.empty() && !(std::abs(w.u_center - w.v_center) > 2.0 * w.half_width))
      r.fail("window", "must not touch the diagonal: |u - v| > 2 half_width");
  }
  const std::size_t nu_points = r.count("nu_points", 4000);
  return [=](Context& c) {
    c.seed("decomposition", f.rng);
    const DecompositionStudyResult res = decomposition_study(f, eps, w, nu_points);
    CsvWriter s(c.file("summary.csv"), {"eps", "distance", "conditional_samples"});
    for (std::size_t k = 0; k < res.eps.size(); ++k) {
      s.row({res.eps[k], res.distance[k], static_cast<double>(res.conditional_samples[k])});
      c.diag("distance_eps_" + eps_tag(res.eps[k]), res.distance[k], res.conditional_samples[k]);
    }
    s.close();
  };
}

Job plan_symmetry(Reader& r) {
  SymmetryParams q;
  q.base = read_fast_ensemble(r);
  q.sigma_equal = r.positive("sigma_equal");
  q.sigma2_unequal = r.positive("sigma2_unequal");
  const std::vector<double> eps = read_eps_list(r, true);
  if (eps.size() > 1) r.fail("eps", "symmetry takes a single eps");
  q.base.noise.eps = eps.empty() ? 0.0 : eps.front();
  q.alpha = r.positive("alpha", 0.01);
  if (!(q.alpha < 1.0)) r.fail("alpha", "must lie in (0, 1)");
  return [=](Context& c) {
    c.seed("symmetry", q.base.rng);
    const SymmetryResult res = symmetry_study(q);
    CsvWriter w(c.file("symmetry.csv"), {"samples", "defect_pm", "critical_pm", "defect_e_equal", "defect_e_unequal",
                                         "sign_acf"});
    w.row({static_cast<double>(res.samples), res.defect_pm, res.critical_pm, res.defect_e_equal, res.defect_e_unequal,
           res.sign_autocorrelation});
    w.close();
    c.diag("defect_pm", res.defect_pm, res.samples);
    c.diag("critical_pm", res.critical_pm, res.samples);
    c.diag("defect_e_equal", res.defect_e_equal, res.samples);
    c.diag("defect_e_unequal", res.defect_e_unequal, res.samples);
  };
}

Job plan_diagonal(Reader& r) {
  DiagonalParams q;
  q.noise = read_sigma(r);
  read_uv_start(r, q.u0, q.v0);
  q.T = read_horizon(r);
  q.dt = r.positive("dt");
  q.burn_in = read_burn_in(r, q.T);
  q.n_paths = r.count("n_paths", 1);
  q.deltas = r.numbers("deltas", false, q.deltas);
  for (double d : q.deltas)
    if (!(d > 0.0)) {
      r.fail("deltas", "entries must be > 0");
      break;
    }
  q.rng = read_rng(r);
  return [=](Context& c) {
    c.seed("diagonal", q.rng);
    const DiagonalResult res = diagonal_study(q);
    CsvWriter w(c.file("occupation.csv"), {"delta", "fraction"});
    for (std::size_t k = 0; k < res.deltas.size(); ++k) {
      w.row({res.deltas[k], res.fraction[k]});
      c.diag("occupation_delta_" + eps_tag(res.deltas[k]), res.fraction[k], res.samples);
    }
    w.close();
  };
}

Job plan_report(Reader& r) {
  const std::string input = r.text("input_dir");
  if (!input.empty() && !fs::is_directory(input)) r.fail("input_dir", "must be an existing directory");
  return [=](Context& c) {
    const auto rows = collect_report(input);
    write_report_csv(c.file("report.csv"), rows);
    c.diag("rows", static_cast<double>(rows.size()));
  };
}

const std::map<std::string, Planner>& planners() {
  static const std::map<std::string, Planner> m{
      {"flow", plan_flow},
      {"avg-table", plan_avg_table},
      {"full-sde", plan_sde<false>},
      {"fast-sde", plan_sde<true>},
      {"limit-uv", plan_uv<false>},
      {"hk", plan_uv<true>},
      {"qv-study", plan_qv},
      {"convergence-study", plan_convergence},
      {"invariant-3d", plan_invariant_3d},
      {"invariant-uv", plan_invariant_uv},
      {"two-estimators", plan_two_estimators},
      {"decomposition", plan_decomposition},
      {"symmetry", plan_symmetry},
      {"diagonal", plan_diagonal},
      {"report", plan_report},
  };
  return m;
}

Job plan(const ExperimentConfig& cfg, std::vector<Violation>& out) {
  Reader r(cfg.params, out);
  Job job = planners().at(cfg.experiment)(r);
  r.reject_unknown();
  return job;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<Violation> v) : std::runtime_error(join(v)), violations_(std::move(v)) {}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"flow",          "avg-table",     "full-sde",       "fast-sde",
                                              "limit-uv",      "hk",            "qv-study",       "convergence-study",
                                              "invariant-3d",  "invariant-uv",  "two-estimators", "decomposition",
                                              "symmetry",      "diagonal",      "report"};
  return names;
}

ExperimentConfig parse_config(const json& doc) {
  std::vector<Violation> v;
  ExperimentConfig cfg;
  cfg.source = doc;
  if (!doc.is_object()) throw ConfigError(std::vector<Violation>{{"<root>", "config must be a JSON object"}});
  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    v.push_back({"experiment", "required string"});
  } else {
    cfg.experiment = doc["experiment"].get<std::string>();
    if (!planners().count(cfg.experiment)) v.push_back({"experiment", "unknown experiment '" + cfg.experiment + "'"});
  }
  if (!doc.contains("output_dir") || !doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty())
    v.push_back({"output_dir", "required non-empty string"});
  else
    cfg.output_dir = doc["output_dir"].get<std::string>();
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) v.push_back({"params", "must be an object"});
    else cfg.params = doc["params"];
  }
  for (const auto& [k, val] : doc.items()) {
    (void)val;
    if (k != "experiment" && k != "output_dir" && k != "params") v.push_back({k, "unknown top-level key"});
  }
  if (!v.empty()) throw ConfigError(std::move(v));
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<Violation>{{"<file>", "cannot read " + path.string()}});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<Violation>{{"<file>", std::string("JSON parse error: ") + e.what()}});
  }
  return parse_config(doc);
}

std::vector<Violation> validate(const ExperimentConfig& cfg) {
  std::vector<Violation> out;
  if (!planners().count(cfg.experiment)) return {{"experiment", "unknown experiment '" + cfg.experiment + "'"}};
  plan(cfg, out);
  return out;
}

std::vector<Violation> validate_file(const fs::path& path) {
  try {
    return validate(load_config(path));
  } catch (const ConfigError& e) {
    return e.violations();
  }
}

RunManifest run(const ExperimentConfig& cfg) {
  std::vector<Violation> v;
  if (!planners().count(cfg.experiment))
    throw ConfigError(std::vector<Violation>{{"experiment", "unknown experiment '" + cfg.experiment + "'"}});
  const Job job = plan(cfg, v);
  if (!v.empty()) throw ConfigError(std::move(v));

  fs::create_directories(cfg.output_dir);
  RunManifest m;
  m.config = cfg.source.is_null() ? json{{"experiment", cfg.experiment}, {"output_dir", cfg.output_dir.string()},
                                         {"params", cfg.params}}
                                  : cfg.source;
  m.version = ZERONOISE_VERSION;
  m.started_utc = utc_now();
  m.threads = thread_count();
  const auto t0 = std::chrono::steady_clock::now();

  Context ctx;
  ctx.dir = cfg.output_dir;
  job(ctx);
  write_diagnostics(ctx.file("diagnostics.csv"), ctx.diagnostics);

  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.seeds = ctx.seeds;
  finalize_manifest(m, cfg.output_dir, ctx.outputs);
  return m;
}

std::vector<ReportRow> collect_report(const fs::path& dir) {
  std::vector<fs::path> runs;
  if (fs::exists(dir / "manifest.json")) runs.push_back(dir);
  if (fs::is_directory(dir))
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "manifest.json" && e.path().parent_path() != dir)
        runs.push_back(e.path().parent_path());
  std::sort(runs.begin(), runs.end());
  std::vector<ReportRow> rows;
  for (const fs::path& run_dir : runs) {
    std::ifstream in(run_dir / "manifest.json");
    const json man = json::parse(in);
    const std::string exp = man.at("config").value("experiment", "?");
    if (exp == "report" || !fs::exists(run_dir / "diagnostics.csv")) continue;
    std::string rel = fs::relative(run_dir, dir).generic_string();
    for (const Diagnostic& d : read_diagnostics(run_dir / "diagnostics.csv")) rows.push_back({rel, exp, d});
  }
  return rows;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::size_t w_run = 3, w_exp = 10, w_stat = 9;
  for (const auto& r : rows) {
    w_run = std::max(w_run, r.run.size());
    w_exp = std::max(w_exp, r.experiment.size());
    w_stat = std::max(w_stat, r.diag.statistic.size());
  }
  std::ostringstream os;
  auto cell = [&](const std::string& s, std::size_t w) { os << std::left << std::setw(static_cast<int>(w) + 2) << s; };
  cell("run", w_run);
  cell("experiment", w_exp);
  cell("statistic", w_stat);
  cell("value", 24);
  cell("n", 10);
  os << "se\n";
  for (const auto& r : rows) {
    cell(r.run, w_run);
    cell(r.experiment, w_exp);
    cell(r.diag.statistic, w_stat);
    cell(format_double(r.diag.value), 24);
    cell(std::to_string(r.diag.n), 10);
    os << format_double(r.diag.se) << '\n';
  }
  return os.str();
}

void write_report_csv(const fs::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "run,experiment,statistic,value,n,se\n";
  for (const auto& r : rows)
    out << r.run << ',' << r.experiment << ',' << r.diag.statistic << ',' << format_double(r.diag.value) << ','
        << r.diag.n << ',' << format_double(r.diag.se) << '\n';
}

json error_record(const std::string& message, const std::vector<Violation>& violations) {
  json j{{"status", "error"}, {"message", message}, {"violations", json::array()}};
  for (const auto& v : violations) j["violations"].push_back({{"field", v.field}, {"constraint", v.constraint}});
  return j;
}

}  // namespace zeronoise
