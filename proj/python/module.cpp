// Python bindings: model setup, classification, trajectories, the scalar
// logistic layer, random dynamics and measure-level experiments.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <sstream>

#include "kolmo/flow.hpp"
#include "kolmo/harness.hpp"
#include "kolmo/logistic.hpp"
#include "kolmo/measure.hpp"
#include "kolmo/model.hpp"
#include "kolmo/noise.hpp"
#include "kolmo/random_dynamics.hpp"
#include "kolmo/sde.hpp"

namespace py = pybind11;
using namespace kolmo;

namespace {

using A3 = std::array<double, 3>;
Vec3 v3(const A3& a) { return {a[0], a[1], a[2]}; }
A3 a3(const Vec3& v) { return {v[0], v[1], v[2]}; }

std::vector<A3> states(const std::vector<State3>& xs) {
  std::vector<A3> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(a3(x));
  return out;
}

py::dict record_dict(const TrajectoryRecord& r) {
  py::dict d;
  d["t"] = r.times;
  d["x"] = states(r.states);
  d["H"] = r.H;
  d["L"] = r.L;
  if (!r.W.empty()) d["W"] = r.W;
  d["invariant_drift"] = r.invariant_drift;
  d["drift_metric"] = r.drift_metric;
  d["left_octant"] = r.left_octant;
  return d;
}

}  // namespace

PYBIND11_MODULE(_kolmo, m) {
  m.doc() = "Stochastic cubic Kolmogorov system lab";
  m.attr("__version__") = kVersion;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double alpha, double sigma, const A3& d) { return ModelParams(alpha, sigma, v3(d)); }),
           py::arg("alpha"), py::arg("sigma") = 0.0, py::arg("d") = A3{0, 0, 0})
      .def_static("from_sigma2",
                  [](double alpha, double s2, const A3& d) { return ModelParams::from_sigma2(alpha, s2, v3(d)); },
                  py::arg("alpha"), py::arg("sigma2"), py::arg("d") = A3{0, 0, 0})
      .def_property_readonly("alpha", &ModelParams::alpha)
      .def_property_readonly("sigma", &ModelParams::sigma)
      .def_property_readonly("sigma2", &ModelParams::sigma2)
      .def_property_readonly("d", [](const ModelParams& p) { return a3(p.d()); })
      .def_property_readonly("m", [](const ModelParams& p) { return a3(p.m()); })
      .def("__repr__", [](const ModelParams& p) {
        std::ostringstream s;
        s << "ModelParams(alpha=" << p.alpha() << ", sigma2=" << p.sigma2() << ", d=(" << p.d()[0] << ", "
          << p.d()[1] << ", " << p.d()[2] << "))";
        return s.str();
      });

  m.def("drift", [](const ModelParams& p, const A3& x) { return a3(drift(p, v3(x))); });
  m.def("jacobian", [](const ModelParams& p, const A3& x) {
    const Mat3 J = jacobian(p, v3(x));
    return std::array<A3, 3>{A3{J(0, 0), J(0, 1), J(0, 2)}, A3{J(1, 0), J(1, 1), J(1, 2)},
                             A3{J(2, 0), J(2, 1), J(2, 2)}};
  });
  m.def("classify", [](const ModelParams& p) {
    const DriftRegime r = classify_regime(p);
    py::dict d;
    d["case"] = to_string(r.canonical_case);
    d["pattern"] = r.pattern_string();
    d["permutation"] = r.permutation;
    d["time_reversed"] = r.time_reversed;
    return d;
  });
  m.def("equilibria", [](const ModelParams& p) {
    const EquilibriumSet es = equilibria(p);
    py::dict d;
    py::list iso;
    for (const auto& e : es.isolated) {
      py::dict q;
      q["label"] = e.label;
      q["point"] = a3(e.point);
      q["eigenvalues"] = std::vector<std::complex<double>>(e.eigenvalues.begin(), e.eigenvalues.end());
      iso.append(q);
    }
    d["isolated"] = iso;
    py::list curves;
    for (const auto& c : es.curves) curves.append(c.name);
    d["curves"] = curves;
    d["sphere"] = es.sphere;
    d["case"] = to_string(es.regime.canonical_case);
    return d;
  });
  m.def("first_integral", [](const ModelParams& p, const A3& x) { return first_integral(p, v3(x)); });
  m.def("h_star", [](const ModelParams& p) { return h_star(p); });
  m.def("period_of_orbit", [](const ModelParams& p, double h) { return period_of_orbit(p, h); });
  m.def("flow_at", [](const ModelParams& p, const A3& x0, double t, double step) { return a3(flow_at(p, v3(x0), t, step)); },
        py::arg("params"), py::arg("x0"), py::arg("t"), py::arg("step") = 5e-3);
  m.def(
      "integrate_flow",
      [](const ModelParams& p, const A3& x0, double t_end, double step, std::size_t record_every) {
        StepControl sc;
        sc.step = step;
        sc.record_every = record_every;
        return record_dict(integrate_flow(p, v3(x0), t_end, sc));
      },
      py::arg("params"), py::arg("x0"), py::arg("t_end"), py::arg("step") = 5e-3, py::arg("record_every") = 1);

  py::class_<BrownianPath>(m, "BrownianPath")
      .def_property_readonly("dt", &BrownianPath::dt)
      .def_property_readonly("t_min", &BrownianPath::t_min)
      .def_property_readonly("t_max", &BrownianPath::t_max)
      .def("at", &BrownianPath::at)
      .def("values", &BrownianPath::values);
  m.def("sample_path", &sample_path, py::arg("seed"), py::arg("t_min"), py::arg("t_max"), py::arg("dt"));
  m.def("shift", &shift);
  m.def("refine", &refine);

  m.def("g_explicit", &g_explicit);
  m.def("u_g", [](const ModelParams& p, const BrownianPath& path, double tol) { return u_g(p, path, tol).value; },
        py::arg("params"), py::arg("path"), py::arg("tol") = 1e-8);
  m.def("time_average_g2", &time_average_g2);
  m.def("stationary_density", &stationary_density);
  m.def("stationary_cdf", &stationary_cdf);
  m.def("density_mode", &density_mode);

  m.def(
      "integrate_sde",
      [](const ModelParams& p, const BrownianPath& path, const A3& x0, double t_end, const std::string& scheme,
         double dt, std::size_t every) {
        return record_dict(integrate_sde(p, path, v3(x0), t_end, {scheme_from_string(scheme), dt}, every));
      },
      py::arg("params"), py::arg("path"), py::arg("x0"), py::arg("t_end"), py::arg("scheme") = "milstein",
      py::arg("dt") = 1e-3, py::arg("record_every") = 1);
  m.def("decompose", [](const ModelParams& p, const BrownianPath& path, const A3& x0, double g0, double t) {
    return a3(decompose(p, path, v3(x0), g0, t));
  });
  m.def(
      "decomposition_gap",
      [](const ModelParams& p, std::uint64_t seed, const A3& x0, double t, double dt, const std::string& scheme,
         double base_dt) { return decomposition_gap(p, seed, v3(x0), t, dt, scheme_from_string(scheme), base_dt); },
      py::arg("params"), py::arg("seed"), py::arg("x0"), py::arg("t"), py::arg("dt"), py::arg("scheme") = "milstein",
      py::arg("base_dt") = 0.0);

  m.def("pullback_point", [](const ModelParams& p, const BrownianPath& path, const A3& x0, double t) {
    return a3(pullback_point(p, path, v3(x0), t));
  });
  m.def("pullback_limit", [](const ModelParams& p, const BrownianPath& path, const A3& x0, double t_max, double tol) {
    const OmegaLimitSample s = pullback_limit(p, path, v3(x0), t_max, tol);
    py::dict d;
    d["kind"] = to_string(s.kind);
    d["inconclusive"] = s.inconclusive;
    d["point"] = a3(s.point);
    d["h"] = s.h;
    d["scale"] = s.scale;
    d["deterministic_label"] = s.deterministic_label;
    d["last_difference"] = s.last_difference;
    return d;
  });
  m.def("lyapunov_analytic", [](const ModelParams& p, const std::string& measure) {
    return a3(lyapunov_analytic(p, measure_from_string(measure)));
  });
  m.def(
      "lyapunov_numeric",
      [](const ModelParams& p, const std::vector<std::uint64_t>& seeds, const std::string& base, const A3& direction,
         double T, double dt) {
        LyapunovOptions o;
        o.T = T;
        o.dt = dt;
        LyapunovBase b = LyapunovBase::origin();
        if (base != "O") {
          const MeasureId id = measure_from_string(base);
          b = LyapunovBase::equilibrium(static_cast<int>(id) - 1);
        }
        const LyapunovEstimate e = lyapunov_numeric(p, seeds, b, v3(direction), o);
        py::dict d;
        d["value"] = e.value;
        d["standard_error"] = e.standard_error;
        d["horizon"] = e.horizon;
        d["per_seed"] = e.per_seed;
        return d;
      },
      py::arg("params"), py::arg("seeds"), py::arg("base") = "O", py::arg("direction") = A3{1, 0, 0},
      py::arg("T") = 1e4, py::arg("dt") = 1e-2);
  m.def("crps", [](const ModelParams& p, const BrownianPath& path, double h, double tol) {
    const CrpsSample c = crps(p, path, h, tol);
    py::dict d;
    d["N_h"] = c.N_h;
    d["period_T"] = c.period_T;
    d["u_g"] = c.u_g;
    d["identity_residual"] = c.identity_residual;
    d["solution_residual"] = c.solution_residual;
    d["t"] = c.grid_t;
    d["psi"] = states(c.grid_psi);
    return d;
  });
  m.def("cone_invariance_check", [](const ModelParams& p, std::uint64_t seed, double h, double t_end, double dt) {
    return cone_invariance_check(p, seed, h, t_end, dt);
  });

  m.def(
      "u_g_samples",
      [](const ModelParams& p, std::uint64_t seed, std::size_t samples, double dt) {
        EnsembleOptions o;
        o.seed = seed;
        o.samples = samples;
        o.dt = dt;
        return u_g_ensemble(p, o).values();
      },
      py::arg("params"), py::arg("seed"), py::arg("samples"), py::arg("dt") = 1e-2);
  m.def("ks_distance", [](const std::vector<double>& xs, const std::function<double(double)>& cdf) {
    return ks_distance(EmpiricalMeasure::from_values(xs), cdf);
  });
  m.def("p_bifurcation_probe", [](double alpha, const std::vector<double>& s2s, std::size_t samples) {
    BifurcationOptions o;
    o.samples = samples;
    py::list out;
    for (const auto& r : p_bifurcation_probe(alpha, s2s, o)) {
      py::dict d;
      d["sigma2"] = r.sigma2;
      d["analytic_shape"] = r.analytic_shape;
      d["empirical_shape"] = r.empirical_shape;
      d["empirical_mode"] = r.empirical_mode;
      d["agree"] = r.agree;
      out.append(d);
    }
    return out;
  }, py::arg("alpha"), py::arg("sigma2_list"), py::arg("samples") = 100000);

  m.def("run", [](const std::string& kind, const std::map<std::string, std::string>& values, const std::string& out,
                  unsigned threads) {
    ExperimentConfig c;
    c.kind = kind;
    for (const auto& [k, v] : values) c.set(k, v);
    c.out_dir = out;
    c.threads = threads;
    const Manifest mf = run(c);
    py::dict d;
    d["theorem"] = mf.theorem;
    d["summary"] = mf.summary;
    py::list files;
    for (const auto& f : mf.files) files.append(f.name);
    d["files"] = files;
    d["config_hash"] = hex64(mf.config_hash);
    return d;
  }, py::arg("kind"), py::arg("values"), py::arg("out"), py::arg("threads") = 0);
  m.def("subcommands", &subcommands);
}
