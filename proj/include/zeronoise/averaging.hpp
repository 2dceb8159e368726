#pragma once

// Averages along deterministic orbits: complete elliptic integrals, the
// function Lambda, Gamma = A(z^2), the time-change coefficients F and G, the
// occupation-measure normalisation, and the averaging operator itself.

#include <functional>
#include <stdexcept>

#include "zeronoise/dynamics.hpp"

namespace zeronoise {

using Observable = std::function<double(const State3&)>;

/// Thrown when adaptive quadrature cannot reach its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double error_estimate)
      : std::runtime_error(what), error_estimate_(error_estimate) {}
  double error_estimate() const { return error_estimate_; }

 private:
  double error_estimate_;
};

/// Thrown when a requested integral does not converge.
class DivergentIntegral : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complete elliptic integrals of the first and second kind, parameter
/// convention m = k^2.
struct EllipticPair {
  double m;
  double K;
  double E;
};

/// K(m), E(m) by the arithmetic-geometric mean. Requires 0 <= m < 1.
EllipticPair elliptic_ke(double m);

/// Lambda(r) = A(z^2) / (u ^ v) on an orbit with ratio r = (u ^ v) / (u v v).
/// Closed form (K(r) - E(r)) / (r K(r)); Lambda(0) = 1/2, Lambda(1) = 1.
double lambda_fn(double r);

/// Gamma(u, v) = (u ^ v) Lambda((u ^ v) / (u v v)); zero when u ^ v = 0.
double gamma_fn(double u, double v);

/// Ratio (u ^ v) / (u v v) with the convention ratio(0, 0) = 0.
double ratio_of(double u, double v);

/// F expressed through the ratio r in [0, 1]: 1 - Lambda(max(r, 1/2)).
double f_of_ratio(double r);

/// Floor value 1 - Lambda(1/2) taken by F below ratio 1/2.
double f_floor();

/// Time-change speed F(u, v). Requires u, v > 0.
double f_fn(double u, double v);

/// G(h, k) = (1 - Lambda(ratio)) / F(h, k); equals 1 for ratio >= 1/2.
/// Requires h, k > 0 and h != k.
double g_fn(double h, double k);

/// Occupation normalisation K_r with K_r^{-1} = int_0^{2pi} dtheta / sqrt(1 - r sin^2 theta),
/// evaluated by adaptive quadrature. Requires 0 < r < 1.
double k_norm(double r);

struct AveragedCoefficients {
  double u;
  double v;
  double gamma;  ///< A(z^2)
  double x2;     ///< A(x^2) = (u - gamma) / 2
  double y2;     ///< A(y^2) = (v - gamma) / 2
  double f;      ///< F(u, v)
  double g_uv;   ///< G(u, v)
};

AveragedCoefficients averaged_coefficients(double u, double v);

/// Integral of psi against the occupation measure nu^sign_{u,v} of the
/// periodic orbit Gamma^sign_{u,v}.
///
/// The theta-integral is evaluated after the substitution sin(theta) = tanh(w)
/// on each half of the circle, which maps the occupation density
/// 1 / sqrt(1 - r sin^2 theta) to 1 / sqrt(1 + (1 - r) sinh^2 w); that
/// integrand is smooth and uniformly resolved as r -> 1. On (or within
/// kDiagonalGuard of) the diagonal the fixed-point average
/// (psi(0,0,sqrt(u)) + psi(0,0,-sqrt(u))) / 2 is returned.
///
/// Throws QuadratureError when the achieved relative error exceeds 1e-9.
double orbit_average(const Observable& psi, double u, double v, int sign);

/// Symmetrised average (nu^+_{u,v} psi + nu^-_{u,v} psi) / 2.
/// On the axes (u ^ v = 0) the orbit degenerates to the fixed points
/// (+-sqrt(u/2), +-sqrt(v/2), 0), which are averaged with equal weight.
double nu_average(const Observable& psi, double u, double v);

enum class ExpansionOrder { Leading, Log };

/// Near-diagonal behaviour of nu psi.
///   Leading: (psi(0,0,sqrt(u)) + psi(0,0,-sqrt(u))) / 2.
///   Log:     C_u(psi) = int_0^{2pi} psi(sqrt(u)cos, sqrt(u)cos, sqrt(u)sin) / |cos| dtheta,
///            the coefficient of 1 / (2 |ln(1 - r)|) when psi vanishes at the poles.
/// Throws DivergentIntegral when C_u(psi) is infinite.
double near_diagonal_expansion(const Observable& psi, double u, ExpansionOrder order);

}  // namespace zeronoise
