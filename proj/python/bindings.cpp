#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ptpp/experiment.hpp"

namespace py = pybind11;
using namespace ptpp;

namespace {

py::array_t<double> matrix(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  py::array_t<double> out({rows.size(), cols});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = j < rows[i].size() ? rows[i][j] : 0.0;
  }
  return out;
}

py::dict outcome_dict(const ExperimentConfig& cfg, const ExperimentOutcome& out) {
  const auto& rep = out.result.report;
  const auto& tr = out.result.trajectory;
  const std::size_t n = cfg.sim.x0.size();

  py::dict report;
  report["transient_ok"] = rep.transient_ok;
  report["steady_ok"] = rep.steady_ok;
  report["all_finite"] = rep.all_finite;
  report["max_abs_error"] = rep.max_abs_error;
  report["max_abs_error_after_T"] = rep.max_abs_error_after_T;
  report["max_abs_control"] = rep.max_abs_control;
  report["steady_bound"] = rep.steady_bound;
  report["steps"] = rep.steps;
  report["breach_time"] = rep.breach_time ? py::cast(*rep.breach_time) : py::none();
  report["signal_sup_norms"] = rep.signal_sup_norms;

  std::vector<double> e, u, yr;
  for (const auto& s : tr.signals) {
    e.push_back(s.transform.e);
    u.push_back(s.u);
    yr.push_back(s.y_r);
  }
  py::dict traj;
  traj["t"] = py::array_t<double>(tr.times.size(), tr.times.data());
  traj["x"] = matrix(tr.states, n);
  traj["y_r"] = py::array_t<double>(yr.size(), yr.data());
  traj["e"] = py::array_t<double>(e.size(), e.data());
  traj["eta"] = py::array_t<double>(tr.eta.size(), tr.eta.data());
  traj["u"] = py::array_t<double>(u.size(), u.data());
  traj["filters"] = matrix(tr.filters, n - 1);
  traj["theta_norm"] = matrix(tr.theta_norms, n);

  py::dict d;
  d["passed"] = out.exit_code == 0;
  d["exit_code"] = out.exit_code;
  d["divergence"] = out.divergence ? py::cast(*out.divergence) : py::none();
  d["report"] = report;
  d["trajectory"] = traj;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ptpp, m) {
  m.doc() = "Prescribed-time tracking control core";

  static py::exception<FunnelBreach> breach(m, "FunnelBreach", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FunnelBreach& e) {
      py::set_error(breach, e.what());
    } catch (const DivergenceError& e) {
      py::set_error(PyExc_ArithmeticError, e.what());
    }
  });

  py::class_<PerfFunction>(m, "PerfFunction")
      .def(py::init<double, double, double, double, double>(), py::arg("a"), py::arg("b"),
           py::arg("c"), py::arg("h"), py::arg("T"))
      .def_property_readonly("a", &PerfFunction::a)
      .def_property_readonly("b", &PerfFunction::b)
      .def_property_readonly("c", &PerfFunction::c)
      .def_property_readonly("h", &PerfFunction::h)
      .def_property_readonly("T", &PerfFunction::settling_time)
      .def("eta", py::vectorize(&PerfFunction::eta))
      .def("eta_dot", py::vectorize(&PerfFunction::eta_dot));

  m.def("perf_from_terminal", &perf_from_terminal, py::arg("b"), py::arg("c"), py::arg("h"),
        py::arg("T"));

  py::enum_<TransformKind>(m, "TransformKind")
      .value("SymmetricTan", TransformKind::SymmetricTan)
      .value("AsymmetricTanUpper", TransformKind::AsymmetricTanUpper)
      .value("AsymmetricTanLower", TransformKind::AsymmetricTanLower);

  py::class_<ErrorTransform>(m, "ErrorTransform")
      .def(py::init<PerfFunction, TransformKind, double>(), py::arg("perf"),
           py::arg("kind") = TransformKind::SymmetricTan, py::arg("phi_floor") = 1e-12)
      .def_property_readonly("perf", &ErrorTransform::perf)
      .def("transform", &ErrorTransform::transform, py::arg("e"), py::arg("t"))
      .def("inverse_transform", &ErrorTransform::inverse_transform, py::arg("z1"), py::arg("t"))
      .def("psi", &ErrorTransform::psi, py::arg("z1"), py::arg("t"))
      .def("varphi", &ErrorTransform::varphi, py::arg("z1"), py::arg("t"))
      .def("inside", &ErrorTransform::inside, py::arg("e"), py::arg("t"))
      .def("terminal_bounds", &ErrorTransform::terminal_bounds);

  py::class_<GaussianGrid>(m, "GaussianGrid")
      .def_property_readonly("rule_count", &GaussianGrid::rule_count)
      .def_property_readonly("input_dimension", &GaussianGrid::input_dimension)
      .def("basis", [](const GaussianGrid& g, const std::vector<double>& x) { return g.basis(x); });
  m.def("make_reference_grid", &make_reference_grid);
  m.def("regressor_energy", [](const GaussianGrid& g, const std::vector<double>& x) {
    return regressor_energy(g, x);
  });

  m.def("zeta", &zeta, py::arg("z"), py::arg("varrho"), py::arg("smoothing") = 0.0);
  m.def("saturated_term", &saturated_term, py::arg("s"), py::arg("guard"));

  py::enum_<ControlMode>(m, "ControlMode")
      .value("Adaptive", ControlMode::Adaptive)
      .value("ApproximatorFree", ControlMode::ApproximatorFree);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_property_readonly("mode", [](const ExperimentConfig& c) { return c.mode; })
      .def_property_readonly("order", [](const ExperimentConfig& c) { return c.sim.x0.size(); })
      .def_property_readonly("a", [](const ExperimentConfig& c) {
        return perf_from_terminal(c.perf.b, c.perf.c, c.perf.h, c.perf.T).a();
      })
      .def("set", [](ExperimentConfig& c, const std::string& key, const py::object& value) {
        std::string text;
        if (py::isinstance<py::str>(value)) {
          text = value.cast<std::string>();
        } else if (py::isinstance<py::bool_>(value)) {
          text = value.cast<bool>() ? "true" : "false";
        } else if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
          std::ostringstream os;
          os.precision(17);
          bool first = true;
          for (auto item : value) {
            os << (first ? "" : ",") << item.cast<double>();
            first = false;
          }
          text = os.str();
        } else {
          std::ostringstream os;
          os.precision(17);
          os << value.cast<double>();
          text = os.str();
        }
        apply_setting(c, key, text);
        return &c;
      }, py::return_value_policy::reference_internal, py::arg("key"), py::arg("value"),
         "Apply one key = value setting; returns self for chaining.")
      .def("validate", &ExperimentConfig::validate)
      .def("__eq__", &ExperimentConfig::operator==)
      .def("__str__", &serialize_config);

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("electromechanical_preset", &electromechanical_preset);
  m.def("single_link_preset", &single_link_preset);
  m.def("weak_gain_single_link", &weak_gain_single_link);
  m.def("serialize_config", &serialize_config);
  m.def("parse_config", [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  });

  m.def(
      "run_experiment",
      [](ExperimentConfig cfg, const std::optional<std::string>& output_dir) {
        if (output_dir) cfg.output_dir = *output_dir;
        ExperimentOutcome out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg, output_dir.has_value());
        }
        return outcome_dict(cfg, out);
      },
      py::arg("config"), py::arg("output_dir") = py::none(),
      "Simulate and verify. Artifacts are written only when output_dir is given.");
}
