// Python bindings for the core library: dynamics, orbit averages and the
// path simulators. Paths come back as NumPy arrays.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>

#include "zeronoise/averaging.hpp"
#include "zeronoise/dynamics.hpp"
#include "zeronoise/measure.hpp"
#include "zeronoise/sde.hpp"

namespace py = pybind11;
using namespace zeronoise;

namespace {

using Vec3 = std::array<double, 3>;

State3 st(const Vec3& a) { return {a[0], a[1], a[2]}; }
Vec3 arr(const State3& s) { return {s.x, s.y, s.z}; }

py::array_t<double> vec(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict trajectory_dict(const Trajectory& tr) {
  py::array_t<double> states({tr.size(), std::size_t{3}});
  auto s = states.mutable_unchecked<2>();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    s(i, 0) = tr.states[i].x;
    s(i, 1) = tr.states[i].y;
    s(i, 2) = tr.states[i].z;
  }
  py::dict d;
  d["t"] = vec(tr.times);
  d["states"] = states;
  d["dt"] = tr.meta.dt;
  d["method"] = tr.meta.method;
  return d;
}

py::dict uv_dict(const UVTrajectory& tr) {
  py::dict d;
  d["t"] = vec(tr.times);
  d["u"] = vec(tr.u);
  d["v"] = vec(tr.v);
  d["dt"] = tr.meta.dt;
  d["method"] = tr.meta.method;
  return d;
}

UVTrajectory uv_from_arrays(const std::vector<double>& t, const std::vector<double>& u, const std::vector<double>& v) {
  UVTrajectory tr;
  tr.times = t;
  tr.u = u;
  tr.v = v;
  return tr;
}

SdeOptions options(const std::string& scheme, std::size_t record_every, double diffusion_scale) {
  SdeOptions o;
  if (scheme == "em") {
    o.scheme = Scheme::EulerMaruyama;
  } else if (scheme == "splitting") {
    o.scheme = Scheme::Splitting;
  } else {
    throw std::invalid_argument("scheme must be 'em' or 'splitting'");
  }
  o.record_every = record_every;
  o.diffusion_scale = diffusion_scale;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conservative quadratic system: dynamics, averaging and SDE paths";
  m.attr("__version__") = ZERONOISE_VERSION;

  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def("vector_field", [](const Vec3& s) { return arr(vector_field(st(s))); }, py::arg("xi"));
  m.def("bilinear", [](const Vec3& a, const Vec3& b) { return arr(bilinear(st(a), st(b))); });
  m.def(
      "phi",
      [](const Vec3& s) {
        const ConservedPair c = phi(st(s));
        return std::pair{c.u, c.v};
      },
      py::arg("xi"), "Conserved pair (2x^2 + z^2, 2y^2 + z^2).");
  m.def("sn", [](const Vec3& s) { return sn(st(s)); }, py::arg("xi"));
  m.def("period", &period, py::arg("u"), py::arg("v"));
  m.def("orbit_point", [](double u, double v, int sign, double theta) { return arr(orbit_point(u, v, sign, theta)); },
        py::arg("u"), py::arg("v"), py::arg("sign") = 1, py::arg("theta") = 0.0);
  m.def(
      "flow", [](const Vec3& xi0, double T, double dt, std::size_t every) { return trajectory_dict(flow(st(xi0), T, dt, every)); },
      py::arg("xi0"), py::arg("T"), py::arg("dt") = 1e-3, py::arg("record_every") = 1);

  m.def(
      "elliptic_ke",
      [](double mm) {
        const EllipticPair p = elliptic_ke(mm);
        return std::pair{p.K, p.E};
      },
      py::arg("m"));
  m.def("lambda_fn", &lambda_fn, py::arg("r"));
  m.def("gamma_fn", &gamma_fn, py::arg("u"), py::arg("v"));
  m.def("f_fn", &f_fn, py::arg("u"), py::arg("v"));
  m.def("g_fn", &g_fn, py::arg("h"), py::arg("k"));
  m.def("k_norm", &k_norm, py::arg("r"));
  m.def(
      "averaged_coefficients",
      [](double u, double v) {
        const AveragedCoefficients a = averaged_coefficients(u, v);
        py::dict d;
        d["gamma"] = a.gamma;
        d["x2"] = a.x2;
        d["y2"] = a.y2;
        d["f"] = a.f;
        d["g"] = a.g_uv;
        return d;
      },
      py::arg("u"), py::arg("v"));
  m.def(
      "orbit_average",
      [](const std::function<double(Vec3)>& psi, double u, double v, int sign) {
        return orbit_average([&](const State3& s) { return psi(arr(s)); }, u, v, sign);
      },
      py::arg("psi"), py::arg("u"), py::arg("v"), py::arg("sign") = 1);

  m.def(
      "simulate_full",
      [](const Vec3& xi0, double s1, double s2, double eps, double T, double dt, std::uint64_t seed,
         std::uint64_t stream, const std::string& scheme, std::size_t every) {
        return trajectory_dict(simulate_full(st(xi0), {s1, s2, eps}, T, dt, {seed, stream}, options(scheme, every, 1.0)));
      },
      py::arg("xi0"), py::arg("sigma1"), py::arg("sigma2"), py::arg("eps"), py::arg("T"), py::arg("dt"),
      py::arg("seed") = 0, py::arg("stream") = 0, py::arg("scheme") = "em", py::arg("record_every") = 1);
  m.def(
      "simulate_fast",
      [](const Vec3& xi0, double s1, double s2, double eps, double T, double dt, std::uint64_t seed,
         std::uint64_t stream, const std::string& scheme, std::size_t every) {
        return trajectory_dict(simulate_fast(st(xi0), {s1, s2, eps}, T, dt, {seed, stream}, options(scheme, every, 1.0)));
      },
      py::arg("xi0"), py::arg("sigma1"), py::arg("sigma2"), py::arg("eps"), py::arg("T"), py::arg("dt"),
      py::arg("seed") = 0, py::arg("stream") = 0, py::arg("scheme") = "splitting", py::arg("record_every") = 1);
  m.def(
      "simulate_limit_uv",
      [](double u0, double v0, double s1, double s2, double T, double dt, std::uint64_t seed, std::uint64_t stream,
         std::size_t every) {
        return uv_dict(simulate_limit_uv(u0, v0, {s1, s2, 0.0}, T, dt, {seed, stream}, options("em", every, 1.0)));
      },
      py::arg("u0"), py::arg("v0"), py::arg("sigma1"), py::arg("sigma2"), py::arg("T"), py::arg("dt"),
      py::arg("seed") = 0, py::arg("stream") = 0, py::arg("record_every") = 1);
  m.def(
      "simulate_hk",
      [](double h0, double k0, double s1, double s2, double T, double dt, std::uint64_t seed, std::uint64_t stream,
         std::size_t every) {
        return uv_dict(simulate_hk(h0, k0, {s1, s2, 0.0}, T, dt, {seed, stream}, options("em", every, 1.0)));
      },
      py::arg("h0"), py::arg("k0"), py::arg("sigma1"), py::arg("sigma2"), py::arg("T"), py::arg("dt"),
      py::arg("seed") = 0, py::arg("stream") = 0, py::arg("record_every") = 1);
  m.def(
      "time_change_forward",
      [](const std::vector<double>& t, const std::vector<double>& u, const std::vector<double>& v, std::size_t refine) {
        return uv_dict(time_change_forward(uv_from_arrays(t, u, v), refine).first);
      },
      py::arg("t"), py::arg("u"), py::arg("v"), py::arg("refine") = 1);
  m.def(
      "time_change_inverse",
      [](const std::vector<double>& t, const std::vector<double>& h, const std::vector<double>& k, std::size_t refine) {
        return uv_dict(time_change_inverse(uv_from_arrays(t, h, k), refine).first);
      },
      py::arg("t"), py::arg("h"), py::arg("k"), py::arg("refine") = 1);

  m.def(
      "ks_two_sample", [](const std::vector<double>& a, const std::vector<double>& b) { return ks_two_sample(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "symmetry_critical_value",
      [](double alpha, double n, const std::string& sym) {
        if (sym != "pm" && sym != "e") throw std::invalid_argument("sym must be 'pm' or 'e'");
        return symmetry_critical_value(alpha, n, sym == "pm" ? Symmetry::PM : Symmetry::E);
      },
      py::arg("alpha"), py::arg("n"), py::arg("sym") = "pm");
}
