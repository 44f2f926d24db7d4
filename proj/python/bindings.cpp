#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lattice_ldp/commands.hpp"
#include "lattice_ldp/config.hpp"
#include "lattice_ldp/deviations.hpp"
#include "lattice_ldp/dynamics.hpp"
#include "lattice_ldp/kernels.hpp"
#include "lattice_ldp/noise.hpp"

namespace py = pybind11;
using namespace lattice_ldp;

namespace {

RunConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "<string>");
}

py::array_t<double> to_array(const std::vector<PathField>& fields) {
  const std::size_t replicas = fields.size();
  const std::size_t times = replicas ? fields[0].time_points : 0;
  const std::size_t sites = replicas ? fields[0].shape.site_count() : 0;
  py::array_t<double> out({replicas, times, sites});
  auto view = out.mutable_unchecked<3>();
  for (std::size_t r = 0; r < replicas; ++r) {
    for (std::size_t t = 0; t < times; ++t) {
      for (std::size_t s = 0; s < sites; ++s) view(r, t, s) = fields[r].at(t, s);
    }
  }
  return out;
}

py::array_t<double> to_array(std::span<const double> values) {
  return py::array_t<double>(static_cast<py::ssize_t>(values.size()), values.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lattice FitzHugh-Nagumo networks with spatially correlated noise";
  m.attr("__version__") = code_version();

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config_invalid || e.code() == ErrorCode::invalid_argument ||
          e.code() == ErrorCode::negative_spectrum || e.code() == ErrorCode::duplicate_name) {
        PyErr_SetString(PyExc_ValueError, e.what());
      } else {
        PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  m.def("resolve_config", [](const std::string& text) { return to_ini(config_from_text(text)); },
        py::arg("text"), "Parse a config and return it with every default filled in.");

  m.def(
      "build_kernel",
      [](int dim, double rate, double scale, int support, int grid, int lambda_support) {
        KappaSpec spec;
        spec.rate = rate;
        spec.scale = scale;
        spec.support = support;
        const auto kernel = build_lambda(build_kappa(dim, spec), grid, lambda_support);
        const auto report = check_domination(kernel);
        py::dict out;
        out["kappa"] = to_array(kernel.kappa_values());
        out["lambda"] = to_array(kernel.lambda_values());
        out["kappa_star"] = kernel.kappa_star();
        out["lambda_tail_mass"] = kernel.lambda_tail_mass();
        out["min_lambda"] = report.min_lambda;
        out["normalization_error"] = report.normalization_error;
        out["max_violation"] = report.max_violation;
        return out;
      },
      py::arg("dim") = 1, py::arg("rate") = 0.5, py::arg("scale") = 1.0, py::arg("support") = 40,
      py::arg("grid") = 4096, py::arg("lambda_support") = 60,
      "Geometric kappa and its dominating lambda, arrays in lattice order.");

  m.def(
      "sample_noise",
      [](int dim, int n, double horizon, std::size_t steps, std::size_t replicas,
         std::uint64_t seed, const std::string& family, double rho, double sigma2,
         std::size_t record_every, unsigned workers) {
        CovarianceSpec spec;
        spec.family = parse_covariance_family(family);
        spec.rho = rho;
        spec.sigma2 = sigma2;
        const auto model = build_spectral_model(spec, LatticeShape(dim, n), TimeGrid(horizon, steps));
        NoiseEnsemble ensemble;
        {
          py::gil_scoped_release release;
          ensemble = sample_noise_paths(model, replicas, seed,
                                        {.record_every = record_every, .workers = workers});
        }
        py::dict out;
        out["paths"] = to_array(ensemble.paths);
        out["steps"] = ensemble.recorded_steps;
        out["eta_star"] = model.eta_star();
        return out;
      },
      py::arg("dim") = 1, py::arg("n") = 4, py::arg("horizon") = 1.0, py::arg("steps") = 1000,
      py::arg("replicas") = 100, py::arg("seed") = 0, py::arg("family") = "geometric",
      py::arg("rho") = 0.4, py::arg("sigma2") = 1.0, py::arg("record_every") = 1,
      py::arg("workers") = 1, "Noise paths as an array [replica, time, site].");

  m.def(
      "simulate",
      [](const std::string& text, std::optional<std::size_t> replicas,
         std::optional<std::uint64_t> seed, unsigned workers) {
        auto config = config_from_text(text);
        if (replicas) config.replicas = *replicas;
        if (seed) config.seed = *seed;
        PathEnsemble run;
        {
          py::gil_scoped_release release;
          run = simulate_network(config.model, build_kappa(config.dim, config.kappa),
                                 build_spectral_model(config.noise, config.shape(), config.grid()),
                                 {.replicas = config.replicas,
                                  .seed = config.seed,
                                  .workers = workers,
                                  .record_every = config.record_every});
        }
        std::vector<PathField> v, w;
        std::vector<double> margins;
        for (const auto& r : run.replicas) {
          v.push_back(r.v);
          w.push_back(r.w);
          margins.push_back(r.synapses.min_margin);
        }
        py::dict out;
        out["v"] = to_array(v);
        out["w"] = to_array(w);
        out["steps"] = run.recorded_steps;
        out["synapse_min_margin"] = to_array(margins);
        return out;
      },
      py::arg("config"), py::arg("replicas") = py::none(), py::arg("seed") = py::none(),
      py::arg("workers") = 1, "Simulate from config text; arrays are [replica, time, site].");

  m.def(
      "verify",
      [](const std::string& text, const std::string& suite, unsigned workers) {
        const auto config = config_from_text(text);
        std::vector<CheckResult> checks;
        {
          py::gil_scoped_release release;
          checks = run_suite(suite, config, workers);
        }
        py::list out;
        for (const auto& c : checks) {
          py::dict row;
          row["name"] = c.suite + "." + c.name;
          row["passed"] = c.pass;
          row["margin"] = c.margin;
          row["detail"] = c.detail;
          out.append(row);
        }
        return out;
      },
      py::arg("config"), py::arg("suite") = "all", py::arg("workers") = 1);

  m.def(
      "scaling",
      [](const std::string& text, std::vector<int> n_list, const std::string& observable,
         std::optional<double> threshold, unsigned workers) {
        const auto config = config_from_text(text);
        const auto registry = ObservableRegistry::with_builtins();
        Scenario scenario;
        scenario.model = config.model;
        scenario.kappa = config.kappa;
        scenario.noise = config.noise;
        scenario.dim = config.dim;
        scenario.horizon = config.horizon;
        scenario.dt = config.dt;
        ScalingOptions options;
        options.threshold = threshold;
        options.replicas = config.replicas;
        options.seed = config.seed;
        options.workers = workers;
        std::vector<ScalingRow> rows;
        {
          py::gil_scoped_release release;
          rows = ldp_scaling_report(scenario, n_list, registry.find(observable), options);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict row;
          row["n"] = r.n;
          row["sites"] = r.sites;
          row["threshold"] = r.estimate.threshold;
          row["hits"] = r.estimate.hits;
          row["p_hat"] = r.estimate.p_hat;
          row["ci"] = py::make_tuple(r.estimate.ci.lo, r.estimate.ci.hi);
          row["norm_log_p"] = r.norm_log_p;
          out.append(row);
        }
        return out;
      },
      py::arg("config"), py::arg("n_list"), py::arg("observable") = "site0_sup",
      py::arg("threshold") = py::none(), py::arg("workers") = 1);

  m.def(
      "wilson_interval",
      [](std::size_t hits, std::size_t trials) {
        const auto ci = wilson_interval(hits, trials);
        return py::make_tuple(ci.lo, ci.hi);
      },
      py::arg("hits"), py::arg("trials"));
}
