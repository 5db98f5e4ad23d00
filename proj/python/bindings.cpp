#include "obstacle/parallel.hpp"
#include "obstacle/scenario.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace obstacle;

namespace {

// JSON crosses the boundary as text; the Python side decodes it with json.
py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
Json from_py(const py::object& o) { return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }

ScenarioConfig resolve(const py::object& scenario) {
  if (py::isinstance<py::str>(scenario)) return builtin_registry().get(scenario.cast<std::string>());
  return parse_config(from_py(scenario));
}

py::array_t<double> nodal_array(const ObstacleSolution& sol) {
  std::vector<py::ssize_t> shape;
  for (int k = sol.grid.dim() - 1; k >= 0; --k) shape.push_back(sol.grid.nodes(k));
  py::array_t<double> a(shape);
  std::copy(sol.u.begin(), sol.u.end(), a.mutable_data());
  return a;
}

py::dict result_dict(const ScenarioResult& r) {
  py::dict d;
  d["name"] = r.config.name;
  d["resolution"] = r.resolution;
  d["passed"] = r.all_pass();
  d["exit_status"] = r.exit_status();
  py::list verdicts;
  for (const Verdict& v : r.verdicts) {
    py::dict e;
    e["name"] = v.name;
    e["pass"] = v.pass;
    e["value"] = v.value;
    e["limit"] = v.limit;
    e["detail"] = v.detail;
    verdicts.append(e);
  }
  d["verdicts"] = verdicts;
  d["notes"] = r.notes;
  d["report"] = to_py(r.report);
  if (r.solution) d["u"] = nodal_array(*r.solution);
  if (r.blowup) {
    d["label"] = to_string(r.blowup->label);
    d["phi0"] = r.blowup->phi0;
    d["stratum"] = r.blowup->stratum;
  }
  if (r.growth) d["theta_hat"] = r.growth->theta_hat;
  if (r.exact_error) d["exact_error"] = *r.exact_error;
  std::vector<std::string> files;
  for (const auto& f : r.files) files.push_back(f.string());
  d["files"] = files;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Obstacle problem solver and free-boundary analysis";
  m.attr("__version__") = library_version();

  static py::exception<LabError> lab_error(m, "LabError", PyExc_RuntimeError);
  static py::exception<LabError> config_error(m, "ConfigError", lab_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const LabError& e) {
      py::object err = e.code() == ErrorCode::ConfigError ? config_error : lab_error;
      py::object inst = err(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(err.ptr(), inst.ptr());
    }
  });

  m.def("list_scenarios", [] { return list_scenarios(); }, "Builtin scenarios as (name, description) pairs.");
  m.def("scenario_config", [](const std::string& name) { return to_py(config_to_json(builtin_registry().get(name))); },
        py::arg("name"), "Builtin scenario configuration as a dict.");
  m.def("validate_config", [](const py::object& cfg) { return to_py(config_to_json(parse_config(from_py(cfg)))); },
        py::arg("config"), "Parses and validates a configuration dict; returns it with defaults filled in.");

  m.def(
      "run_scenario",
      [](const py::object& scenario, std::optional<int> resolution, std::optional<std::vector<std::string>> analyses,
         std::optional<std::string> output, std::optional<std::uint64_t> seed, int threads, const std::string& format) {
        ScenarioConfig cfg = resolve(scenario);
        RunOptions o;
        o.resolution = resolution;
        o.analyses = std::move(analyses);
        o.seed = seed;
        o.threads = threads;
        o.format = parse_table_format(format);
        o.write_files = output.has_value();
        if (output) cfg.output = *output;
        ScenarioResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(cfg, o);
        }
        return result_dict(r);
      },
      py::arg("scenario"), py::arg("resolution") = py::none(), py::arg("analyses") = py::none(),
      py::arg("output") = py::none(), py::arg("seed") = py::none(), py::arg("threads") = 1,
      py::arg("format") = "csv",
      "Runs a builtin scenario (by name) or a configuration dict and returns the verdicts, the report and "
      "the nodal solution (indexed [z][y][x]).");

  m.def(
      "refinement_study",
      [](const py::object& scenario, int levels, std::optional<int> resolution) {
        RunOptions o;
        o.resolution = resolution;
        ConvergenceTable t;
        const ScenarioConfig cfg = resolve(scenario);
        {
          py::gil_scoped_release release;
          t = refinement_study(cfg, levels, o);
        }
        return to_py(t.to_table().to_json());
      },
      py::arg("scenario"), py::arg("levels") = 3, py::arg("resolution") = py::none());

  m.def("theta", &theta, py::arg("dim"), "Energy of the half-space profile, |B1| / (4 (n + 2)).");
  m.def(
      "psi",
      [](const std::vector<double>& data, int dim) {
        const bool half = static_cast<int>(data.size()) == dim;
        PsiResult p;
        if (half) {
          p = psi(HomogeneousProfile::half_space(Eigen::Map<const Eigen::VectorXd>(data.data(), dim)));
        } else if (static_cast<int>(data.size()) == dim * dim) {
          p = psi(HomogeneousProfile::polynomial(Eigen::Map<const Eigen::MatrixXd>(data.data(), dim, dim)));
        } else {
          throw LabError(ErrorCode::InvalidArgument, "psi expects a unit vector or a flattened n x n matrix");
        }
        return py::make_tuple(p.defining, p.mass, p.closed_form);
      },
      py::arg("data"), py::arg("dim"),
      "(defining, mass, closed_form) for a half-space direction (n values) or a matrix B (n*n values).");
  m.def("set_threads", &set_thread_count, py::arg("count"));
}
