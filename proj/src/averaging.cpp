#include "zeronoise/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace zeronoise {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuadTol = 1e-12;
constexpr double kAcceptTol = 1e-9;
constexpr unsigned kMaxDepth = 18;

// Integrate f over [a, b] with adaptive Gauss-Kronrod; throws if the
// achieved error is not small relative to the L1 norm.
template <class F>
double integrate(F&& f, double a, double b, const char* who) {
  double err = 0.0;
  double l1 = 0.0;
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, kMaxDepth, kQuadTol, &err, &l1);
  if (!std::isfinite(val) || err > kAcceptTol * std::max(l1, 1e-300)) {
    std::ostringstream os;
    os << who << ": quadrature did not converge (error estimate " << err << ", L1 " << l1 << ")";
    throw QuadratureError(os.str(), err);
  }
  return val;
}

// Upper limit of the w-integral. The weight 1/sqrt(1 + (1-r) sinh^2 w) has
// a plateau up to w ~ ln(2/sqrt(1-r)) and then decays like e^{-w}.
double w_cutoff(double r) { return std::log(2.0 / std::sqrt(1.0 - r)) + 40.0; }

double weight(double w, double one_minus_r) {
  const double sh = std::sinh(w);
  return 1.0 / std::sqrt(1.0 + one_minus_r * sh * sh);
}

// Orbit point in terms of (sin theta, cos theta) on the + orbit. `root` is
// sqrt(1 - r sin^2 theta), passed in so callers can evaluate it without
// cancellation.
State3 orbit_point_sc(double u, double v, double s, double c, double root) {
  if (u > v) return {std::sqrt(u / 2.0) * root, std::sqrt(v / 2.0) * c, std::sqrt(v) * s};
  return {std::sqrt(u / 2.0) * c, std::sqrt(v / 2.0) * root, std::sqrt(u) * s};
}

double poles_average(const Observable& psi, double u) {
  const double a = std::sqrt(u);
  return 0.5 * (psi(State3{0.0, 0.0, a}) + psi(State3{0.0, 0.0, -a}));
}

}  // namespace

EllipticPair elliptic_ke(double m) {
  if (!(m >= 0.0 && m < 1.0)) throw std::invalid_argument("elliptic_ke: requires 0 <= m < 1");
  double a = 1.0;
  double b = std::sqrt(1.0 - m);
  double c = std::sqrt(m);
  double pow2 = 0.5;
  double sum = pow2 * c * c;
  for (int n = 0; n < 64 && std::abs(a - b) > 1e-15 * a; ++n) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    c = 0.5 * (a - b);
    a = an;
    b = bn;
    pow2 *= 2.0;
    sum += pow2 * c * c;
  }
  const double K = kPi / (2.0 * a);
  return {m, K, K * (1.0 - sum)};
}

double lambda_fn(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("lambda_fn: requires 0 <= r <= 1");
  if (r == 1.0) return 1.0;
  if (r < 1e-3) {
    // Taylor series; the closed form loses digits to cancellation here.
    return 0.5 + r * (1.0 / 16.0 + r * (1.0 / 32.0 + r * (41.0 / 2048.0 + r * (59.0 / 4096.0))));
  }
  const EllipticPair ke = elliptic_ke(r);
  return (ke.K - ke.E) / (r * ke.K);
}

double ratio_of(double u, double v) {
  const double hi = std::max(u, v);
  return hi > 0.0 ? std::min(u, v) / hi : 0.0;
}

double gamma_fn(double u, double v) {
  if (u < 0.0 || v < 0.0) throw std::invalid_argument("gamma_fn: requires u, v >= 0");
  const double lo = std::min(u, v);
  if (lo == 0.0) return 0.0;
  return lo * lambda_fn(ratio_of(u, v));
}

double f_floor() {
  static const double value = 1.0 - lambda_fn(0.5);
  return value;
}

double f_of_ratio(double r) { return r < 0.5 ? f_floor() : 1.0 - lambda_fn(r); }

double f_fn(double u, double v) {
  if (!(u > 0.0 && v > 0.0)) throw std::invalid_argument("f_fn: requires u, v > 0");
  return f_of_ratio(ratio_of(u, v));
}

double g_fn(double h, double k) {
  if (!(h > 0.0 && k > 0.0)) throw std::invalid_argument("g_fn: requires h, k > 0");
  const double r = ratio_of(h, k);
  if (r >= 0.5) return 1.0;
  return (1.0 - lambda_fn(r)) / f_floor();
}

double k_norm(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("k_norm: requires 0 < r < 1");
  const double omr = 1.0 - r;
  const double quarter = integrate([omr](double w) { return weight(w, omr); }, 0.0, w_cutoff(r), "k_norm");
  return 1.0 / (4.0 * quarter);
}

AveragedCoefficients averaged_coefficients(double u, double v) {
  if (!(u > 0.0 && v > 0.0)) throw std::invalid_argument("averaged_coefficients: requires u, v > 0");
  AveragedCoefficients c;
  c.u = u;
  c.v = v;
  c.gamma = gamma_fn(u, v);
  c.x2 = 0.5 * (u - c.gamma);
  c.y2 = 0.5 * (v - c.gamma);
  c.f = f_fn(u, v);
  c.g_uv = near_diagonal(u, v) ? 1.0 : g_fn(u, v);
  return c;
}

double orbit_average(const Observable& psi, double u, double v, int sign) {
  if (!(u > 0.0 && v > 0.0)) throw std::invalid_argument("orbit_average: requires u, v > 0");
  if (sign != 1 && sign != -1) throw std::invalid_argument("orbit_average: sign must be +1 or -1");
  if (near_diagonal(u, v)) return poles_average(psi, u);

  const double r = ratio_of(u, v);
  const double omr = 1.0 - r;
  // theta in (-pi/2, pi/2) and (pi/2, 3pi/2): sin = tanh w, cos = +-sech w,
  // d theta = sech w dw, and 1/sqrt(1 - r sin^2) = cosh w * weight(w).
  auto integrand = [&](double w) {
    const double s = std::tanh(w);
    const double ch = std::cosh(w);
    const double sh = std::sinh(w);
    const double c = 1.0 / ch;
    const double root = std::sqrt(1.0 + omr * sh * sh) / ch;
    const double wt = weight(w, omr);
    State3 p = orbit_point_sc(u, v, s, c, root);
    State3 q = orbit_point_sc(u, v, s, -c, root);
    if (sign < 0) {
      p = apply_sym_pm(p);
      q = apply_sym_pm(q);
    }
    return (psi(p) + psi(q)) * wt;
  };
  const double W = w_cutoff(r);
  const double total = integrate(integrand, -W, W, "orbit_average");
  return total / (4.0 * elliptic_ke(r).K);
}

double nu_average(const Observable& psi, double u, double v) {
  if (u < 0.0 || v < 0.0) throw std::invalid_argument("nu_average: requires u, v >= 0");
  if (std::min(u, v) == 0.0) {
    const State3 p{std::sqrt(u / 2.0), std::sqrt(v / 2.0), 0.0};
    return 0.5 * (psi(p) + psi(apply_sym_pm(p)));
  }
  return 0.5 * (orbit_average(psi, u, v, 1) + orbit_average(psi, u, v, -1));
}

double near_diagonal_expansion(const Observable& psi, double u, ExpansionOrder order) {
  if (!(u > 0.0)) throw std::invalid_argument("near_diagonal_expansion: requires u > 0");
  if (order == ExpansionOrder::Leading) return poles_average(psi, u);

  const double a = std::sqrt(u);
  const double top = psi(State3{0.0, 0.0, a});
  const double bottom = psi(State3{0.0, 0.0, -a});
  const double scale = std::max({1.0, std::abs(top), std::abs(bottom)});
  if (std::abs(top) > 1e-12 * scale || std::abs(bottom) > 1e-12 * scale)
    throw DivergentIntegral("near_diagonal_expansion: psi does not vanish at (0,0,+-sqrt(u)); C_u(psi) is infinite");

  // d theta / |cos theta| = dw under sin = tanh w.
  auto integrand = [&](double w) {
    const double c = a / std::cosh(w);
    const double s = a * std::tanh(w);
    return psi(State3{c, c, s}) + psi(State3{-c, -c, s});
  };
  const double W = 40.0;
  return integrate(integrand, -W, W, "near_diagonal_expansion");
}

}  // namespace zeronoise
