#pragma once

// Empirical measures and the statistics computed from them.

#include <array>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zeronoise/averaging.hpp"
#include "zeronoise/dynamics.hpp"
#include "zeronoise/sde.hpp"

namespace zeronoise {

struct Histogram {
  std::vector<double> edges;   // size bins + 1
  std::vector<double> masses;  // normalised by the measure's total weight
};

/// Weighted point cloud in 2 or 3 dimensions.
///
/// Weights are stored raw; weight(i) returns the normalised weight so the
/// normalised weights sum to one. Merging concatenates, so the merge of
/// several measures reweights each part by its share of the total raw
/// weight (equal to the sample count for unit weights). Concatenation is
/// exactly associative.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(int dim = 3);

  int dim() const { return dim_; }
  std::size_t size() const { return raw_weights_.size(); }
  bool empty() const { return raw_weights_.empty(); }

  void add(std::span<const double> point, double weight = 1.0);
  void add(const State3& s, double weight = 1.0) { add(std::array<double, 3>{s.x, s.y, s.z}, weight); }
  void add2(double u, double v, double weight = 1.0) { add(std::array<double, 2>{u, v}, weight); }
  void reserve(std::size_t n);

  /// Append all samples of `other` (same dimension required).
  EmpiricalMeasure& merge(const EmpiricalMeasure& other);
  static EmpiricalMeasure merged(std::span<const EmpiricalMeasure> parts);

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double coord(std::size_t i, int axis) const { return coords_[i * static_cast<std::size_t>(dim_) + axis]; }
  double raw_weight(std::size_t i) const { return raw_weights_[i]; }
  double weight(std::size_t i) const { return raw_weights_[i] / total_; }
  double total_raw_weight() const { return total_; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& raw_weights() const { return raw_weights_; }

  /// Normalised expectation of f(point).
  double expect(const std::function<double(std::span<const double>)>& f) const;

  /// Histogram of a projection. Empty `edges` selects uniform
  /// Freedman-Diaconis bins over the sample range.
  Histogram histogram(const std::function<double(std::span<const double>)>& proj,
                      std::vector<double> edges = {}) const;

  friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

 private:
  int dim_;
  std::vector<double> coords_;
  std::vector<double> raw_weights_;
  double total_ = 0.0;
};

/// Time-uniform occupation measure of the samples with t >= burn_in.
EmpiricalMeasure empirical_from(const Trajectory& traj, double burn_in);
EmpiricalMeasure empirical_from(const UVTrajectory& traj, double burn_in);

/// Image under Phi, weights preserved.
EmpiricalMeasure push_phi(const EmpiricalMeasure& m);

/// Freedman-Diaconis bin width (2 IQR n^{-1/3}) of unweighted values.
double freedman_diaconis_width(std::vector<double> values);

/// Weighted two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> wa, std::span<const double> b,
                     std::span<const double> wb);
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Named 1D projections used for sliced distances: x, y, z, x+y, x-y in 3D
/// and u, v, u+v, u-v in 2D.
struct Projection {
  std::string name;
  std::function<double(std::span<const double>)> f;
};
std::vector<Projection> slice_projections(int dim);

/// max over slice_projections of the weighted KS statistic.
double sliced_ks(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

enum class Symmetry { E, PM };

/// Sliced KS statistic between m and its image under the symmetry,
/// maximised over the 3D slice projections.
double symmetry_defect(const EmpiricalMeasure& m, Symmetry sym);

/// Number of slice projections on which the symmetry acts non-trivially
/// (4 for pm: x, y, x+y, x-y; 3 for e: x, y, x-y).
int symmetry_active_projections(Symmetry sym);

/// P(sup_{0<=s<=1} |W_s| < c) for standard Brownian motion.
double sup_abs_bm_cdf(double c);

/// Critical value c/sqrt(n_eff) for symmetry_defect at level alpha, with
/// Bonferroni correction over the active projections. Under the symmetric
/// null and iid samples, sqrt(n) times the per-projection defect converges
/// to sup_{[0,1]} |W|.
double symmetry_critical_value(double alpha, double n_eff, Symmetry sym);

/// Fraction of samples with |U - V| <= delta.
double diag_occupation(const UVTrajectory& uv, double delta, double burn_in = 0.0);

/// Normalised mass of {u + v < delta}.
double small_mass(const EmpiricalMeasure& lambda_hat, double delta);

struct BandDensity {
  double lo;
  double hi;
  double mass;
  double area;
  double density;
  std::size_t count;
  bool sparse;  // fewer than 100 samples
};

/// Per-band mass / area for bands of |u - v| given by consecutive
/// `band_edges`, restricted to the window s_lo <= u + v <= s_hi.
std::vector<BandDensity> density_profile(const EmpiricalMeasure& lambda_hat, std::span<const double> band_edges,
                                         double s_lo, double s_hi);

/// Lebesgue area of {a <= |u - v| < b, s_lo <= u + v <= s_hi, u, v >= 0}.
double band_area(double a, double b, double s_lo, double s_hi);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Batch-means estimate of a time average and its standard error.
MeanSe batch_means(std::span<const double> series, std::size_t batches = 20);

/// Mean and standard error of independent samples.
MeanSe sample_mean(std::span<const double> values);

struct TwoEstimators {
  EmpiricalMeasure direct;    // occupation of the (U, V) path
  EmpiricalMeasure weighted;  // (H, K) occupation reweighted by 1/F
  UVTrajectory uv_path;
  UVTrajectory hk_path;
};

/// Estimates the invariant law of the limiting (U, V) system two ways:
/// directly, and from the time-changed (H, K) path weighted by 1/F(H, K).
/// Both runs have horizon T, step dt and start at (u0, v0); the (H, K) run
/// uses stream rng.stream + 1.
TwoEstimators uv_invariant_two_ways(const NoiseParams& p, double T, double dt, RngSpec rng, double burn_in,
                                    double u0 = 1.0, double v0 = 0.5, std::size_t record_every = 1);

struct DecompositionWindow {
  double u_center;
  double v_center;
  double half_width;
};

void validate_window(const DecompositionWindow& w);

/// Samples of nu_{u,v} = (nu^+ + nu^-)/2: n points equally spaced in time
/// over one period of each signed orbit.
EmpiricalMeasure nu_samples(double u, double v, std::size_t n_per_sign);

struct DecompositionResult {
  double distance;
  std::size_t conditional_samples;
};

/// Sliced KS distance between mu_hat conditioned on Phi in the window and
/// nu samples at the window centre. Throws std::runtime_error if fewer than
/// `min_samples` points fall in the window.
DecompositionResult decomposition_check(const EmpiricalMeasure& mu_hat, const DecompositionWindow& w,
                                        std::size_t nu_points = 4000, std::size_t min_samples = 200);

struct MonteCarloEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Monte Carlo estimate of the limiting fast semigroup: start (U, V) at
/// Phi(xi), evolve the limit SDE to time t, average nu(phi) at the endpoint.
/// phi must be invariant under sym_pm (checked on a few probe points).
MonteCarloEstimate fast_semigroup(const Observable& phi, const State3& xi, double t, const NoiseParams& p,
                                  std::size_t n_paths, double dt, RngSpec rng);

}  // namespace zeronoise
