#pragma once

// Ensemble experiments built from the core modules. Each study is a pure
// function of its parameter struct; ensembles are parallel over paths with
// one RNG stream per path, so results do not depend on the thread count.

#include <cstdint>
#include <string>
#include <vector>

#include "zeronoise/measure.hpp"
#include "zeronoise/sde.hpp"

namespace zeronoise {

// --- deterministic checks -------------------------------------------------

struct ConservationResult {
  double max_rel_drift = 0.0;  // max over states, time and both components
  std::size_t states = 0;
};

/// Integrate `n_states` random initial states (coordinates uniform in
/// [-2, 2]) for time T and record the largest relative drift of Phi.
ConservationResult conservation_study(std::size_t n_states, double T, double dt, std::uint64_t seed);

/// max |B(xi, xi) . xi| / |xi|^3 over n random states (scales log-uniform
/// in [1e-3, 1e3]).
double orthogonality_study(std::size_t n, std::uint64_t seed);

// --- strong convergence to the deterministic flow --------------------------

struct StrongConvergenceParams {
  State3 xi0{1.0, 2.0, 0.5};
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  std::vector<double> eps_list{1e-1, 1e-2, 1e-3, 1e-4};
  double t = 1.0;
  double dt = 1e-4;
  std::size_t n_paths = 1000;
  Scheme scheme = Scheme::EulerMaruyama;
  RngSpec rng{};
};

struct StrongConvergenceResult {
  std::vector<double> eps;
  std::vector<double> msd;     // E |xi^eps_t - xi_t|^2
  std::vector<double> msd_se;
  double slope = 0.0;          // least-squares slope of log msd vs log eps
};

StrongConvergenceResult strong_convergence_study(const StrongConvergenceParams& prm);

// --- fast-time ensembles ---------------------------------------------------

struct FastEnsembleParams {
  NoiseParams noise;            // eps > 0
  State3 xi0{1.0, 0.5, 0.25};
  double dt_factor = 0.1;       // step = dt_factor * eps (fast time)
  double burn_in = 3.0;         // fast time
  std::size_t n_paths = 100;
  std::size_t samples_per_path = 1000;
  double spacing = 0.1;         // fast time between recorded samples
  Scheme scheme = Scheme::Splitting;
  RngSpec rng{};
};

struct InvariantSample {
  EmpiricalMeasure mu{3};
  /// Lag-one autocorrelation of sn(xi) between consecutive samples
  /// (pooled over paths; samples with sn = 0 skipped).
  double sign_autocorrelation = 0.0;
  /// Per-path sample blocks, in path order; block i holds samples
  /// [i * samples_per_path, (i+1) * samples_per_path).
  std::size_t samples_per_path = 0;
};

/// Samples of mu^eps: each path is burned in, then recorded every
/// `spacing` fast-time units.
InvariantSample sample_invariant_3d(const FastEnsembleParams& prm);

// --- moment bounds ---------------------------------------------------------

struct MomentParams {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
  State3 xi0{1.0, 0.5, 0.25};
  double burn_in_fast = 3.0;    // fast-time burn-in before t = 0
  double horizon = 100.0;       // original time
  std::size_t checkpoints = 100;
  std::size_t n_paths = 2000;
  double dt_factor = 0.1;
  RngSpec rng{};
};

struct MomentResult {
  std::vector<double> eps;
  std::vector<double> sup_m4;     // sup over checkpoints of E |xi|^4
  std::vector<double> sup_m4_se;  // standard error at the maximising checkpoint
  std::vector<double> mean_m2;    // time-averaged E |xi|^2
  double relative_spread = 0.0;   // (max - min) / min of sup_m4 across eps
};

MomentResult moment_study(const MomentParams& prm);

// --- quadratic-variation convergence ---------------------------------------

struct QvParams {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  std::vector<double> eps_list{1e-1, 1e-3};
  State3 xi0{1.0, 0.5, 0.25};
  double t = 5.0;
  double dt_factor = 0.1;
  double limit_dt = 1e-3;
  std::size_t n_paths = 500;
  RngSpec rng{};
};

struct QvResult {
  std::vector<double> eps;
  std::vector<double> ks_to_limit;
  std::vector<double> mean_fast;
  double mean_limit = 0.0;
  std::vector<std::vector<double>> fast_samples;  // per eps
  std::vector<double> limit_samples;
};

/// (1/t) int_0^t X~^2 ds over fast-time paths against (1/t) int_0^t
/// (U - Gamma)/2 ds over limit-SDE paths from the same initial (u, v).
QvResult qv_study(const QvParams& prm);

// --- limit (U, V) and (H, K) studies --------------------------------------

struct DiagonalParams {
  NoiseParams noise{1.0, 1.0, 0.0};
  double u0 = 1.0;
  double v0 = 0.5;
  double T = 1000.0;
  double dt = 1e-3;
  double burn_in = 10.0;
  std::size_t n_paths = 1;
  std::vector<double> deltas{0.1, 0.03, 0.01, 0.003};
  RngSpec rng{};
};

struct DiagonalResult {
  std::vector<double> deltas;
  std::vector<double> fraction;
  std::size_t samples = 0;
};

DiagonalResult diagonal_study(const DiagonalParams& prm);

struct PositivityResult {
  std::uint64_t steps = 0;
  std::uint64_t negative = 0;
  std::uint64_t nonfinite = 0;
  double min_u = 0.0, min_v = 0.0, min_h = 0.0, min_k = 0.0;
  std::uint64_t hk_rejections = 0;
};

/// Runs n_paths limit (U, V) paths and n_paths (H, K) paths of
/// `steps_per_path` steps each and counts negative or non-finite values at
/// every step.
PositivityResult positivity_study(const NoiseParams& p, double dt, std::size_t n_paths, std::size_t steps_per_path,
                                  RngSpec rng);

struct TwoEstimatorParams {
  NoiseParams noise{1.0, 1.2, 0.0};
  double T = 1000.0;
  double dt = 1e-3;
  double burn_in = 10.0;
  double u0 = 1.0;
  double v0 = 0.5;
  std::size_t batches = 25;
  RngSpec rng{};
};

struct EstimatorComparison {
  std::string statistic;
  MeanSe direct;
  MeanSe weighted;
  double z = 0.0;  // |direct - weighted| / combined se
};

struct TwoEstimatorResult {
  std::vector<EstimatorComparison> rows;  // mean_u, mean_v, prob_u_gt_v
  double weighted_normalisation = 0.0;    // estimator B applied to f = 1
};

TwoEstimatorResult two_estimator_study(const TwoEstimatorParams& prm);

struct DensityParams {
  NoiseParams noise{1.0, 1.0, 0.0};
  double u0 = 1.0;
  double v0 = 0.5;
  double T = 1000.0;
  double dt = 1e-3;
  double burn_in = 10.0;
  std::size_t n_paths = 4;
  std::size_t record_every = 10;
  std::vector<double> band_edges{0.01, 0.03, 0.1, 0.3, 1.0};
  double s_lo = 1.0;
  double s_hi = 4.0;
  RngSpec rng{};
};

struct DensityResult {
  std::vector<BandDensity> bands;
  bool increasing_toward_diagonal = false;
};

DensityResult density_study(const DensityParams& prm);

// --- invariant-measure diagnostics of the full system ----------------------

struct SymmetryParams {
  FastEnsembleParams base;  // noise.sigma ignored; see sigma_equal / sigma_unequal
  double sigma_equal = 1.0;
  double sigma2_unequal = 2.0;
  double alpha = 0.01;
};

struct SymmetryResult {
  std::size_t samples = 0;
  double defect_pm = 0.0;
  double critical_pm = 0.0;
  double defect_e_equal = 0.0;
  double defect_e_unequal = 0.0;
  double sign_autocorrelation = 0.0;
};

SymmetryResult symmetry_study(const SymmetryParams& prm);

struct TightnessResult {
  std::vector<double> deltas;
  std::vector<double> mass;
  std::vector<double> mass_se;     // across independent paths
  std::vector<double> scaled;      // mass * |log delta|
  std::vector<double> scaled_se;
  bool no_growth = false;          // scaled non-increasing within 3 se
  std::size_t samples = 0;
};

TightnessResult tightness_study(const FastEnsembleParams& prm, const std::vector<double>& deltas);

struct DecompositionStudyResult {
  std::vector<double> eps;
  std::vector<double> distance;
  std::vector<std::size_t> conditional_samples;
};

DecompositionStudyResult decomposition_study(const FastEnsembleParams& base, const std::vector<double>& eps_list,
                                             const DecompositionWindow& w, std::size_t nu_points = 4000);

/// Least-squares slope of y on x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace zeronoise
