// Python bindings for the volfn core: test functionals and their transforms,
// spot covariance estimation, the path simulator and the estimate/mc drivers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>

#include "json.hpp"
#include "volfn/errors.hpp"
#include "volfn/harness.hpp"
#include "volfn/kernels.hpp"
#include "volfn/numutil.hpp"

namespace py = pybind11;
using namespace volfn;

namespace {

SymMatrix matrix_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() == 0) return SymMatrix::scalar(arr.at());
  if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1))
    throw ConfigError("expected a square 2-d array");
  int d = static_cast<int>(arr.shape(0));
  std::vector<double> full(static_cast<size_t>(d) * d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) full[static_cast<size_t>(j) * d + k] = arr.at(j, k);
  return SymMatrix(d, full);
}

py::array_t<double> matrix_to_array(const SymMatrix& m) {
  int d = m.dim();
  py::array_t<double> arr({d, d});
  auto buf = arr.mutable_unchecked<2>();
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) buf(j, k) = m(j, k);
  return arr;
}

py::object json_to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      py::dict d;
      for (auto it = j.begin(); it != j.end(); ++it)
        d[py::str(it.key())] = json_to_py(it.value());
      return d;
    }
    case nlohmann::json::value_t::array: {
      py::list l;
      for (const auto& v : j) l.append(json_to_py(v));
      return l;
    }
    case nlohmann::json::value_t::string:
      return py::str(j.get<std::string>());
    case nlohmann::json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
      return py::int_(j.get<long long>());
    case nlohmann::json::value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case nlohmann::json::value_t::number_float:
      return py::float_(j.get<double>());
    default:
      return py::none();
  }
}

nlohmann::json py_to_json(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<long long>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::dict>(obj)) {
    nlohmann::json j = nlohmann::json::object();
    for (auto item : obj.cast<py::dict>())
      j[item.first.cast<std::string>()] = py_to_json(item.second);
    return j;
  }
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    nlohmann::json j = nlohmann::json::array();
    for (auto item : obj.cast<py::sequence>()) j.push_back(py_to_json(item));
    return j;
  }
  throw ConfigError("cannot convert python object to JSON");
}

EstimatorConfig config_from_kwargs(const py::kwargs& kw) {
  EstimatorConfig cfg;
  for (auto item : kw) {
    std::string key = item.first.cast<std::string>();
    if (key == "theta")
      cfg.theta = item.second.cast<double>();
    else if (key == "varpi")
      cfg.varpi = item.second.cast<double>();
    else if (key == "trunc_scale")
      cfg.trunc_scale = item.second.cast<double>();
    else if (key == "truncation")
      cfg.truncation_enabled = item.second.cast<bool>();
    else if (key == "varpi_prime")
      cfg.varpi_prime = item.second.cast<double>();
    else if (key == "jump_scale")
      cfg.jump_trunc_scale = item.second.cast<double>();
    else if (key == "jump_correction")
      cfg.jump_correction = item.second.cast<bool>();
    else if (key == "quad_nodes")
      cfg.quad_nodes = item.second.cast<int>();
    else if (key == "legacy_border")
      cfg.legacy_border = item.second.cast<bool>();
    else if (key == "r_activity")
      cfg.r_activity = item.second.cast<double>();
    else
      throw ConfigError("unknown estimator option '" + key + "'");
  }
  return cfg;
}

ObservedSeries series_from_array(
    py::array_t<double, py::array::c_style | py::array::forcecast> values,
    double delta_n) {
  ObservedSeries s;
  if (values.ndim() == 1) {
    s.dim = 1;
    s.values.assign(values.data(), values.data() + values.shape(0));
  } else if (values.ndim() == 2) {
    s.dim = static_cast<int>(values.shape(1));
    s.values.assign(values.data(), values.data() + values.size());
  } else {
    throw ConfigError("series array must be 1-d or 2-d");
  }
  s.delta_n = delta_n;
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_volfn, m) {
  m.doc() = "spot-volatility functional estimation with sqrt(n) windows";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<MatrixFunctional>(m, "Functional")
      .def_static(
          "from_name",
          [](const std::string& name, int dim) {
            return MatrixFunctional::from_name(name, dim);
          },
          py::arg("name"), py::arg("dim") = 1)
      .def_property_readonly("name", &MatrixFunctional::name)
      .def_property_readonly("dim", &MatrixFunctional::dim)
      .def_property_readonly("growth_exponent", &MatrixFunctional::growth_exponent)
      .def("__call__",
           [](const MatrixFunctional& g, py::array_t<double> x) {
             return g.eval(matrix_from_array(x));
           })
      .def("grad",
           [](const MatrixFunctional& g, py::array_t<double> x) {
             return matrix_to_array(g.grad(matrix_from_array(x)));
           })
      .def("hess",
           [](const MatrixFunctional& g, py::array_t<double> x) {
             HessTensor H = g.hess(matrix_from_array(x));
             int d = H.dim();
             py::array_t<double> arr({d, d, d, d});
             auto buf = arr.mutable_unchecked<4>();
             for (int j = 0; j < d; ++j)
               for (int k = 0; k < d; ++k)
                 for (int l = 0; l < d; ++l)
                   for (int mm = 0; mm < d; ++mm) buf(j, k, l, mm) = H(j, k, l, mm);
             return arr;
           })
      .def("h",
           [](const MatrixFunctional& g, py::array_t<double> x) {
             return h_from_g(g, matrix_from_array(x));
           })
      .def("hbar",
           [](const MatrixFunctional& g, py::array_t<double> x) {
             return hbar_from_g(g, matrix_from_array(x));
           })
      .def(
          "G",
          [](const MatrixFunctional& g, py::array_t<double> x, py::array_t<double> y,
             int nodes) {
            return bias_kernel_G(g, matrix_from_array(x), matrix_from_array(y), nodes);
          },
          py::arg("x"), py::arg("y"), py::arg("quad_nodes") = 16)
      .def(
          "Gprime",
          [](const MatrixFunctional& g, py::array_t<double> x, py::array_t<double> y,
             int nodes) {
            return bias_kernel_Gprime(g, matrix_from_array(x), matrix_from_array(y),
                                      nodes);
          },
          py::arg("x"), py::arg("y"), py::arg("quad_nodes") = 16)
      .def(
          "Gsecond",
          [](const MatrixFunctional& g, py::array_t<double> x, py::array_t<double> y,
             int nodes) {
            return bias_kernel_Gsecond(g, matrix_from_array(x), matrix_from_array(y),
                                       nodes);
          },
          py::arg("x"), py::arg("y"), py::arg("quad_nodes") = 16);

  m.def("window_size", &window_size, py::arg("delta_n"), py::arg("theta"));
  m.def("normal_quantile", &normal_quantile, py::arg("p"));

  m.def(
      "spot_cov_series",
      [](py::array_t<double> values, double delta_n, double theta, double u_n) {
        ObservedSeries s = series_from_array(values, delta_n);
        int k_n = window_size(delta_n, theta);
        auto spots = spot_cov_series(s, k_n, u_n);
        int M = static_cast<int>(spots.size());
        int d = s.dim;
        py::array_t<double> arr({M, d, d});
        auto buf = arr.mutable_unchecked<3>();
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) buf(i, j, k) = spots[i](j, k);
        return arr;
      },
      py::arg("values"), py::arg("delta_n"), py::arg("theta") = 1.0,
      py::arg("u_n") = std::numeric_limits<double>::infinity(),
      "rolling truncated spot covariance estimates");

  m.def(
      "estimate",
      [](py::array_t<double> values, double delta_n, const std::string& g_name,
         double level, const py::object& true_value, const py::kwargs& kw) {
        ObservedSeries s = series_from_array(values, delta_n);
        MatrixFunctional g = MatrixFunctional::from_name(g_name, s.dim);
        std::optional<double> truth;
        if (!true_value.is_none()) truth = true_value.cast<double>();
        EstimateReport r =
            run_estimate(s, g, config_from_kwargs(kw), level, truth);
        return json_to_py(r.to_json());
      },
      py::arg("values"), py::arg("delta_n"), py::arg("g") = "square",
      py::arg("level") = 0.95, py::arg("true_value") = py::none(),
      "debiased estimate of int g(c_s) ds from observed values");

  m.def(
      "simulate",
      [](const py::dict& scenario, double delta_n) {
        ScenarioSpec spec = ScenarioSpec::from_json(py_to_json(scenario));
        SimulatedPath path = simulate_path(spec, delta_n);
        int n = path.series.n_observations();
        int d = path.series.dim;
        py::array_t<double> values({n, d});
        auto buf = values.mutable_unchecked<2>();
        for (int i = 0; i < n; ++i)
          for (int a = 0; a < d; ++a) buf(i, a) = path.series.value(i, a);
        py::dict out;
        out["values"] = values;
        out["delta_n"] = delta_n;
        py::dict integrated;
        for (const char* name : {"identity", "square"}) {
          MatrixFunctional g = MatrixFunctional::from_name(name, d);
          integrated[name] = true_integrated_functional(path, g);
        }
        out["integrated"] = integrated;
        py::list jumps;
        for (const auto& ev : path.c_jump_log) {
          py::dict jd;
          jd["time"] = ev.time;
          jd["size"] = matrix_to_array(ev.size);
          jd["pre"] = matrix_to_array(ev.pre);
          jumps.append(jd);
        }
        out["c_jumps"] = jumps;
        out["n_x_jumps"] = path.x_jump_times.size();
        return out;
      },
      py::arg("scenario"), py::arg("delta_n"),
      "simulate an (X, c) path; returns observed values plus ground truth");

  m.def(
      "mc",
      [](const py::dict& scenario, double delta_n, const std::string& g_name,
         int reps, const std::vector<double>& levels, int threads,
         const py::kwargs& kw) {
        ScenarioSpec spec = ScenarioSpec::from_json(py_to_json(scenario));
        MatrixFunctional g = MatrixFunctional::from_name(g_name, spec.dim);
        MCReport r = run_mc(spec, g, config_from_kwargs(kw), delta_n, reps,
                            levels, threads);
        return json_to_py(r.to_json());
      },
      py::arg("scenario"), py::arg("delta_n"), py::arg("g") = "square",
      py::arg("reps") = 100, py::arg("levels") = std::vector<double>{0.95},
      py::arg("threads") = 1,
      "Monte Carlo bias/variance/coverage study; returns the aggregate report");

#ifdef VERSION_INFO
#define VOLFN_STR2(x) #x
#define VOLFN_STR(x) VOLFN_STR2(x)
  m.attr("__version__") = VOLFN_STR(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
