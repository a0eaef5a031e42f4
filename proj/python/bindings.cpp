#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kdvh/errors.hpp"
#include "kdvh/hierarchy.hpp"
#include "kdvh/ibpcalc.hpp"
#include "kdvh/lab.hpp"
#include "kdvh/modenergy.hpp"
#include "kdvh/spectral.hpp"

namespace py = pybind11;
using namespace kdvh;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

SpectralField field(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a one-dimensional array");
  return SpectralField::from_values(std::vector<double>(a.data(), a.data() + a.size()));
}

Array array(const SpectralField& f) { return Array(static_cast<py::ssize_t>(f.size()), f.values().data()); }

lab::Config config(const std::string& json_text) {
  return json_text.empty() ? lab::Config() : lab::Config(nlohmann::json::parse(json_text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "KdV hierarchy symbolic and spectral toolkit";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ThresholdViolation>(m, "ThresholdViolation", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BlowUp>(m, "BlowUp", PyExc_ArithmeticError);

  m.def("version", &lab::version);

  m.def("hierarchy_level", [](int l) {
    const HierarchyLevel& h = generate(l);
    return py::dict(py::arg("l") = l, py::arg("G") = to_string(h.G), py::arg("H") = to_string(h.H.canonical),
                    py::arg("rhs") = to_string(h.rhs), py::arg("G_latex") = to_latex(h.G),
                    py::arg("json") = nlohmann::json{{"G", to_json(h.G)}, {"H", to_json(h.H.canonical)}}.dump());
  }, py::arg("l"));

  m.def("alpha_coeffs", [](int l) {
    std::vector<std::string> out;
    for (const auto& a : alpha_coeffs(l).alphas) out.push_back(to_fraction_string(a));
    return out;
  }, py::arg("l"), "α_{j,l} for j = 1..l as exact 'p/q' strings");
  m.def("verify_identity", &verify_identity, py::arg("l"), py::call_guard<py::gil_scoped_release>());

  m.def("energy_blueprint", [](int l) { return energy::to_json(energy::build_energy(l)).dump(); }, py::arg("l"),
        py::call_guard<py::gil_scoped_release>());
  m.def("energy_threshold", &energy::threshold, py::arg("l"));
  m.def("evaluate_energy", [](int l, double s, const Array& u) {
    if (!(s > energy::threshold(l))) throw ThresholdViolation("s must exceed 4l - 9/2");
    return energy::evaluate_energy(energy::build_energy(l), s, field(u));
  }, py::arg("l"), py::arg("s"), py::arg("u"));

  m.def("sobolev_norm", [](const Array& u, double s) { return spectral::sobolev_norm(field(u), s); }, py::arg("u"),
        py::arg("s"));
  m.def("mollify", [](const Array& u, double eps, int order) { return array(spectral::mollify(field(u), eps, order)); },
        py::arg("u"), py::arg("eps"), py::arg("order") = 2);
  m.def("random_field", [](int n, int kmax, double decay, double amplitude, unsigned long long seed) {
    return array(spectral::random_field(n, kmax, decay, amplitude, seed));
  }, py::arg("n"), py::arg("kmax"), py::arg("decay"), py::arg("amplitude"), py::arg("seed"));

  m.def("solve", [](const Array& u0, const std::string& config_json) {
    lab::Config c = config(config_json);
    spectral::FlowSpec flow = lab::flow_from_config(c);
    spectral::SolverConfig sc = lab::solver_from_config(c);
    SpectralField u = field(u0);
    sc.N = u.size();
    spectral::Trajectory tr;
    {
      py::gil_scoped_release release;
      tr = spectral::solve(u, flow, sc);
    }
    return py::make_tuple(array(tr.final_state), lab::trajectory_csv(tr, {0, 1, 2}));
  }, py::arg("u0"), py::arg("config_json") = "", "Returns (final state, diagnostics CSV)");

  m.def("run_experiment", [](const std::string& name, const std::string& config_json) {
    lab::ExperimentResult r;
    {
      py::gil_scoped_release release;
      r = lab::run_experiment(name, config(config_json));
    }
    return py::make_tuple(r.pass, r.metrics.dump(), r.csv);
  }, py::arg("name"), py::arg("config_json") = "");
}
