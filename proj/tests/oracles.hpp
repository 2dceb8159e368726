#pragma once

// Reference computations that share no code with the library. Used to pin
// derived values (periods, Lambda, elliptic integrals, K_r) in unit and
// acceptance tests.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace oracle {

// State of the ODE augmented with q' = z^2, so that q accumulates the time
// integral of z^2 along the orbit.
struct Aug {
  double x, y, z, q;
};

inline Aug rhs(const Aug& s) { return {s.y * s.z, s.x * s.z, -2.0 * s.x * s.y, s.z * s.z}; }

inline Aug axpy(const Aug& s, double h, const Aug& k) {
  return {s.x + h * k.x, s.y + h * k.y, s.z + h * k.z, s.q + h * k.q};
}

inline Aug rk4(const Aug& s, double h) {
  const Aug k1 = rhs(s);
  const Aug k2 = rhs(axpy(s, 0.5 * h, k1));
  const Aug k3 = rhs(axpy(s, 0.5 * h, k2));
  const Aug k4 = rhs(axpy(s, h, k3));
  return {s.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x), s.y + h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
          s.z + h / 6.0 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z), s.q + h / 6.0 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q)};
}

// dz/dt; its + to - crossings are the maxima of z.
inline double zdot(const Aug& s) { return -2.0 * s.x * s.y; }

struct ZmaxReturn {
  double period;     // time between two consecutive maxima of z
  double z2_mean;    // time average of z^2 over that period
};

/// Integrates from (sqrt(u/2), sqrt(v/2), 0) with plain RK4 and locates two
/// successive maxima of z by bisection on the sub-step length.
inline ZmaxReturn zmax_return(double u, double v, double h = 1e-3) {
  Aug s{std::sqrt(u / 2.0), std::sqrt(v / 2.0), 0.0, 0.0};
  double t = 0.0;
  double events_t[2] = {0.0, 0.0};
  double events_q[2] = {0.0, 0.0};
  int found = 0;
  const double t_max = 1e6;
  while (found < 2) {
    if (t > t_max) throw std::runtime_error("oracle: no return within t_max");
    const Aug next = rk4(s, h);
    if (zdot(s) > 0.0 && zdot(next) <= 0.0) {
      double lo = 0.0, hi = h;
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (zdot(rk4(s, mid)) > 0.0 ? lo : hi) = mid;
      }
      const double tau = 0.5 * (lo + hi);
      events_t[found] = t + tau;
      events_q[found] = rk4(s, tau).q;
      ++found;
    }
    s = next;
    t += h;
  }
  const double T = events_t[1] - events_t[0];
  return {T, (events_q[1] - events_q[0]) / T};
}

/// Lambda(r) as the time average of z^2 / (u ^ v) along the orbit with
/// u = 1, v = r.
inline double lambda_ode(double r, double h = 1e-3) { return zmax_return(1.0, r, h).z2_mean / r; }

/// Trapezoid rule over one full period of a smooth 2pi-periodic integrand;
/// converges geometrically.
inline double periodic_trapezoid(const std::function<double(double)>& f, int n) {
  const double h = 2.0 * std::numbers::pi / n;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += f(h * k);
  return s * h;
}

/// K(m) = (1/4) int_0^{2pi} (1 - m sin^2)^{-1/2}.
inline double elliptic_k(double m, int n = 200000) {
  return 0.25 * periodic_trapezoid([m](double t) { return 1.0 / std::sqrt(1.0 - m * std::sin(t) * std::sin(t)); }, n);
}

inline double elliptic_e(double m, int n = 200000) {
  return 0.25 * periodic_trapezoid([m](double t) { return std::sqrt(1.0 - m * std::sin(t) * std::sin(t)); }, n);
}

/// int_0^{2pi} (1 - r sin^2)^{-1/2}, the inverse occupation normalisation.
inline double kr_inverse(double r, int n = 200000) { return 4.0 * elliptic_k(r, n); }

/// Lambda(r) from the literal theta integrals of sin^2 against the
/// occupation density (1 - r sin^2)^{-1/2}.
inline double lambda_quadrature(double r, int n = 200000) {
  const auto w = [r](double t) { return 1.0 / std::sqrt(1.0 - r * std::sin(t) * std::sin(t)); };
  const double num = periodic_trapezoid([&](double t) { return std::sin(t) * std::sin(t) * w(t); }, n);
  return num / periodic_trapezoid(w, n);
}

}  // namespace oracle
