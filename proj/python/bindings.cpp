#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "mixp/app.hpp"
#include "mixp/calculus.hpp"
#include "mixp/config.hpp"
#include "mixp/expr.hpp"
#include "mixp/regularity.hpp"
#include "mixp/scheme.hpp"

namespace py = pybind11;
using namespace mixp;

namespace {

py::array_t<double> to_array(const GridFunction& u) {
  const Grid& g = u.grid();
  std::vector<py::ssize_t> shape;
  if (g.dim() == 1)
    shape = {g.nodes(0)};
  else
    shape = {g.nodes(1), g.nodes(0)};
  py::array_t<double> a(shape);
  std::copy(u.values().begin(), u.values().end(), a.mutable_data());
  return a;
}

py::array_t<double> coordinates(const Grid& g, int axis) {
  std::vector<double> x(static_cast<std::size_t>(g.nodes(axis)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1) * g.h(axis);
  py::array_t<double> a(std::vector<py::ssize_t>{static_cast<py::ssize_t>(x.size())});
  std::copy(x.begin(), x.end(), a.mutable_data());
  return a;
}

// nlohmann json to python objects through the json module
py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict sequence(const ExperimentConfig& cfg) {
  auto opt = cfg.sequence_options();
  if (cfg.seed != 0) opt.initial = initial_field(cfg.grid, cfg.seed);
  SequenceResult r;
  {
    py::gil_scoped_release release;
    r = run_sequence(cfg.problem(), cfg.regime_info, opt);
  }
  py::dict d;
  d["solution"] = to_array(r.solution);
  d["x"] = coordinates(*cfg.grid, 0);
  if (cfg.dim == 2) d["y"] = coordinates(*cfg.grid, 1);
  d["report"] = to_python(sequence_json(r));
  py::list iterates;
  for (const auto& u : r.iterates) iterates.append(to_array(u));
  d["iterates"] = iterates;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Singular mixed local/nonlocal p-Laplace problems: approximation scheme and regularity checks";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", base);
  py::register_exception<NonConvergence>(m, "NonConvergence", base);

  py::class_<Expression>(m, "Expression")
      .def(py::init(&Expression::parse), py::arg("text"))
      .def("__call__", &Expression::evaluate, py::arg("x"), py::arg("y") = 0.0)
      .def("__str__", &Expression::to_string)
      .def("__eq__", [](const Expression& a, const Expression& b) { return a == b; })
      .def_property_readonly("is_constant", &Expression::is_constant);

  py::class_<ExperimentConfig>(m, "Config")
      .def_static("parse", &parse_config, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_config(path); }, py::arg("path"))
      .def_readonly("dim", &ExperimentConfig::dim)
      .def_readonly("p", &ExperimentConfig::p)
      .def_readonly("s", &ExperimentConfig::s)
      .def_readonly("q", &ExperimentConfig::q)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_property_readonly("regime", [](const ExperimentConfig& c) { return std::string(to_string(c.regime_info.regime)); })
      .def_property_readonly("gamma", [](const ExperimentConfig& c) { return c.gamma_values; })
      .def_property_readonly("f", [](const ExperimentConfig& c) { return c.f_values; })
      .def("hash", &ExperimentConfig::hash)
      .def("to_json", [](const ExperimentConfig& c) { return to_python(c.to_json()); });

  m.def("sequence", &sequence, py::arg("config"),
        "Run the approximation sequence; returns the limit solution, node coordinates, iterates and the report.");

  m.def(
      "regularity",
      [](const ExperimentConfig& cfg) {
        RegularityStudy st;
        {
          py::gil_scoped_release release;
          st = regularity_study(cfg);
        }
        nlohmann::json j{{"fine", st.fine}, {"coarse", st.coarse}, {"drift", st.drift},
                         {"max_drift", st.max_drift}, {"failures", st.failures}, {"pass", st.pass()}};
        return to_python(j);
      },
      py::arg("config"));

  m.def(
      "convergence",
      [](const ExperimentConfig& cfg) {
        ConvergenceStudy st;
        {
          py::gil_scoped_release release;
          st = convergence_study(cfg);
        }
        py::dict d;
        d["M"] = st.nodes;
        d["h"] = st.h;
        d["error"] = st.error;
        d["min_ratio"] = st.min_ratio;
        d["roundtrip_error"] = st.roundtrip_error;
        d["pass"] = st.pass;
        return d;
      },
      py::arg("config"));

  m.def(
      "check_alg_inequality",
      [](double p, std::int64_t samples, std::uint64_t seed, int dim) {
        const auto r = check_alg_inequality(p, samples, seed, dim);
        return py::dict(py::arg("violations") = r.violations, py::arg("skipped") = r.skipped,
                        py::arg("c_fit") = r.c_fit);
      },
      py::arg("p"), py::arg("samples") = 100000, py::arg("seed") = 0, py::arg("dim") = 2);

  m.def(
      "check_structure_hypotheses",
      [](double p, double q, int dim, std::int64_t samples, std::uint64_t seed) {
        const auto r = check_structure_hypotheses(Exponents(p, 0.5, dim, q), samples, seed);
        return py::dict(py::arg("h1_violations") = r.h1_violations, py::arg("h2_violations") = r.h2_violations,
                        py::arg("C1") = r.constants.c1, py::arg("C2") = r.constants.c2);
      },
      py::arg("p"), py::arg("q"), py::arg("dim"), py::arg("samples") = 100000, py::arg("seed") = 0);

  m.def(
      "run",
      [](const std::string& subcommand, std::optional<std::string> config, std::optional<std::string> out,
         std::optional<std::uint64_t> seed, std::optional<int> threads, std::optional<int> schedule_k) {
        RunOptions opt{config, out, seed, threads, schedule_k};
        std::ostringstream log;
        int code;
        {
          py::gil_scoped_release release;
          code = run(subcommand, opt, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("subcommand"), py::arg("config") = py::none(), py::arg("out") = py::none(), py::arg("seed") = py::none(),
      py::arg("threads") = py::none(), py::arg("schedule_k") = py::none(),
      "Same as the command line; returns (exit_code, log).");
}
