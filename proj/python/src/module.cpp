// Python bindings: the check catalog, curvature at a point, suite runs, flow
// traces and N-convergence studies. Configurations and reports cross the
// boundary as JSON text; the package wrapper converts them to dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "riccilab/cli.hpp"
#include "riccilab/errors.hpp"
#include "riccilab/riemann.hpp"

namespace py = pybind11;
using namespace riccilab;

namespace {

std::vector<std::vector<double>> matrix(const TensorJ& t) {
  const int n = t.dim();
  std::vector<std::vector<double>> out(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i][j] = t(i, j).value();
  return out;
}

py::dict curvature_at(const std::string& provider, const std::vector<double>& coords, double time) {
  const ProviderPtr p = provider_from_name(provider);
  ChartPoint pt{coords, time};
  if (static_cast<int>(coords.size()) != p->dim())
    throw PointOutOfChart(provider + " needs " + std::to_string(p->dim()) + " coordinates");
  const MetricJet jet = eval_metric_jet(*p, pt, 2);
  const CurvaturePack curv = curvature(jet, christoffel(jet));
  py::dict d;
  d["metric"] = matrix(jet.g);
  d["ricci"] = matrix(curv.ricci);
  d["scalar"] = curv.scalar.value();
  return d;
}

std::string run_suite_json(const std::string& config) {
  const RunConfig c = config_from_json(config);
  Context ctx(c.grid);
  SuiteResult result;
  {
    py::gil_scoped_release release;
    result = run_suite(suite_request(c), ctx);
  }
  return reports_json(result);
}

std::vector<py::dict> trace(const std::string& config, const std::string& snapshot_dir) {
  std::vector<py::dict> out;
  for (const TraceRow& r : flow_trace(config_from_json(config), snapshot_dir)) {
    py::dict d;
    d["t"] = r.t;
    d["min_tR"] = r.min_tR;
    d["min_Z"] = r.min_Z;
    out.push_back(d);
  }
  return out;
}

std::vector<py::dict> convergence(const std::string& config) {
  std::vector<py::dict> out;
  for (const ConvergenceResult& r : convergence_runs(config_from_json(config))) {
    py::list fits;
    for (const SlopeFit& f : r.report.fits) {
      py::dict fd;
      fd["quantity"] = f.quantity;
      fd["residuals"] = f.residuals;
      fd["slope"] = f.slope;
      fd["exact"] = f.exact;
      fits.append(fd);
    }
    py::dict d;
    d["provider"] = r.provider;
    d["n"] = r.report.Ns;
    d["fits"] = fits;
    out.push_back(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical checks for Ricci flow space-time identities";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigInvalid>(m, "ConfigInvalid", base.ptr());
  py::register_exception<UnknownCheck>(m, "UnknownCheck", base.ptr());
  py::register_exception<ProviderUnavailable>(m, "ProviderUnavailable", base.ptr());
  py::register_exception<PointOutOfChart>(m, "PointOutOfChart", base.ptr());
  py::register_exception<CflViolation>(m, "CflViolation", base.ptr());

  m.def("catalog", [] {
    std::vector<py::dict> out;
    for (const CheckInfo& c : catalog()) {
      py::dict d;
      d["id"] = c.id;
      d["citation"] = c.citation;
      d["tolerance"] = c.analytic_tolerance;
      d["providers"] = default_providers(c);
      out.push_back(d);
    }
    return out;
  });
  m.def("known_providers", &known_providers);
  m.def("curvature_at", &curvature_at, py::arg("provider"), py::arg("coords"), py::arg("time") = 0.0,
        "metric, Ricci tensor and scalar curvature of a closed-form provider at a chart point");
  m.def("default_config", [] { return config_to_json(RunConfig{}); });
  m.def("normalize_config", [](const std::string& text) { return config_to_json(config_from_json(text)); });
  m.def("run_suite_json", &run_suite_json, py::arg("config"));
  m.def("flow_trace", &trace, py::arg("config"), py::arg("snapshot_dir") = "");
  m.def("convergence", &convergence, py::arg("config"));
}
