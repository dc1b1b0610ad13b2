#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "collapse/analytics.hpp"
#include "collapse/commands.hpp"
#include "collapse/config.hpp"
#include "collapse/feedback_loop.hpp"
#include "collapse/montecarlo.hpp"
#include "collapse/ngram.hpp"

namespace py = pybind11;
using namespace collapse;

namespace {

// Configs may be passed as a JSON string or as a dict.
std::string as_json(const py::object& config) {
  if (py::isinstance<py::str>(config)) return config.cast<std::string>();
  return py::module_::import("json").attr("dumps")(config).cast<std::string>();
}

py::dict curve_dict(const CurveAggregate& agg) {
  py::dict d;
  d["strategy"] = to_string(agg.strategy);
  d["mean"] = agg.per_iteration_mean;
  d["stderr"] = agg.per_iteration_stderr;
  d["trials"] = agg.trials;
  d["analytic"] = agg.analytic ? py::cast(agg.analytic->values) : py::none();
  d["max_sigma_deviation"] = agg.max_sigma_deviation ? py::cast(*agg.max_sigma_deviation) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Model-data feedback loop simulations";

  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  (void)numerical;
  (void)config_error;

  m.def("prefactor", &prefactor, py::arg("noise_std"), py::arg("dim"), py::arg("samples_per_iter"));
  m.def("basel_bound", &basel_bound, py::arg("noise_std"), py::arg("dim"), py::arg("samples_per_iter"));

  m.def(
      "analytic_curve",
      [](const std::string& strategy, double noise_std, std::size_t dim, std::size_t samples, std::size_t n) {
        return analytic_curve(parse_strategy(strategy, "strategy"), noise_std, dim, samples, n).values;
      },
      py::arg("strategy"), py::arg("noise_std"), py::arg("dim"), py::arg("samples_per_iter"),
      py::arg("iterations"));

  m.def(
      "simulate",
      [](const py::object& config, std::size_t threads) {
        const ExperimentConfig c = parse_config(as_json(config));
        CurveAggregate agg;
        {
          py::gil_scoped_release release;
          agg = run_experiment(c, threads);
        }
        return curve_dict(agg);
      },
      py::arg("config"), py::arg("threads") = 1,
      "Runs every trial of an experiment config and returns the aggregated curve.");

  m.def(
      "run_trial",
      [](const py::object& config, std::uint64_t trial) {
        const ExperimentConfig c = parse_config(as_json(config));
        RngStream rng(c.root_seed, trial);
        const TrialResult r = run_trial(c, rng, {.record_weights = true});
        std::vector<Vector> weights;
        for (const Weights& w : *r.per_iteration_weights) weights.push_back(w.values());
        return py::make_tuple(r.per_iteration_error, weights);
      },
      py::arg("config"), py::arg("trial") = 0,
      "Per-iteration test errors and fitted weights of one trial.");

  m.def(
      "accumulate_closed_form",
      [](const Matrix& design, const std::vector<Vector>& noise, const Vector& w_star) {
        return theorem1_weights(design, noise, Weights(w_star)).values();
      },
      py::arg("design"), py::arg("noise"), py::arg("true_weights"));

  m.def(
      "fit_least_squares",
      [](const Matrix& x, const Vector& y) { return fit_least_squares(Dataset(x, y)).values(); },
      py::arg("design"), py::arg("targets"));
  m.def(
      "fit_ridge",
      [](const Matrix& x, const Vector& y, double lambda) { return fit_ridge(Dataset(x, y), lambda).values(); },
      py::arg("design"), py::arg("targets"), py::arg("ridge_lambda"));

  m.def(
      "expected_inverse_gram",
      [](std::size_t dim, std::size_t samples, std::size_t trials, std::uint64_t seed, std::size_t threads) {
        Lemma1Estimate est;
        {
          py::gil_scoped_release release;
          est = lemma1_mc_estimate(dim, samples, make_covariance(IsotropicCov{dim}), trials,
                                   RngStream(seed, 0), threads);
        }
        py::dict d;
        d["mean_inverse"] = est.mean_inverse;
        d["trace_mean"] = est.trace_mean;
        d["trace_stderr"] = est.trace_stderr;
        d["closed_form_trace"] = lemma1_expected_trace(dim, samples);
        return d;
      },
      py::arg("dim"), py::arg("samples"), py::arg("trials"), py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "ngram",
      [](const py::object& config, std::size_t threads) {
        const NgramRunConfig c = parse_ngram_config(as_json(config));
        py::list out;
        for (Strategy s : c.strategies) {
          NgramExperiment e = c.experiment;
          e.strategy = s;
          CurveAggregate agg;
          {
            py::gil_scoped_release release;
            agg = run_ngram_experiment(e, threads);
          }
          out.append(curve_dict(agg));
        }
        return out;
      },
      py::arg("config"), py::arg("threads") = 1,
      "Held-out cross-entropy curves of the n-gram loop, one per strategy.");

  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a collapse-lab subcommand; returns (exit_code, stdout, stderr).");
}
