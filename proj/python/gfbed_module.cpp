// Python bindings over the core operations: estimators, gradient-free
// design gradients, simulators, the training loop and the posterior stage.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gfbed/bed.hpp"
#include "gfbed/config.hpp"
#include "gfbed/es.hpp"
#include "gfbed/io.hpp"
#include "gfbed/mi.hpp"
#include "gfbed/models.hpp"
#include "gfbed/nn.hpp"
#include "gfbed/posterior.hpp"
#include "gfbed/version.hpp"

namespace py = pybind11;
using namespace gfbed;

namespace {

struct RunSummary {
  VectorXd xi_star;
  VectorXd smile;
  std::string run_dir;
};

RunSummary run_from_config(const std::string& config_text) {
  cfg::ExperimentConfig config = cfg::parse_config_text(config_text);
  io::RunArtifacts art = io::run_experiment(config);
  RunSummary s;
  s.xi_star = art.result.xi_star.values;
  s.smile.resize(static_cast<Eigen::Index>(art.result.trace.records.size()));
  for (Eigen::Index i = 0; i < s.smile.size(); ++i)
    s.smile(i) = art.result.trace.records[i].smile;
  s.run_dir = art.run_dir;
  return s;
}

py::dict posterior_from_run(const std::string& run_dir, const std::string& sampler) {
  io::PosteriorArtifacts art = io::run_posterior(run_dir, sampler);
  py::dict d;
  d["samples"] = art.samples;
  d["mean"] = art.summary.mean;
  d["stddev"] = art.summary.stddev;
  d["sampler"] = art.summary.sampler;
  d["acceptance_rate"] = art.acceptance_rate;
  return d;
}

}  // namespace

PYBIND11_MODULE(gfbed_core, m) {
  m.doc() = "gradient-free Bayesian experimental design for implicit simulators";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<UnsupportedModelError>(m, "UnsupportedModelError");

  // estimators
  m.def("clip", &mi::clip, py::arg("u"), py::arg("v"), py::arg("w"));
  m.def("log_mean_exp", &mi::log_mean_exp, py::arg("values"));
  m.def("mine_lower_bound", &mi::mine_lower_bound, py::arg("joint_scores"), py::arg("marg_scores"));
  m.def("smile_lower_bound", &mi::smile_lower_bound, py::arg("joint_scores"), py::arg("marg_scores"),
        py::arg("tau"));
  m.def("marginal_pairing", &mi::marginal_pairing, py::arg("n"), py::arg("seed"));
  m.def(
      "nmc_estimate",
      [](const std::string& model_id, const VectorXd& xi, int n_outer, int m_inner,
         std::uint64_t seed) {
        auto model = models::make_model(model_id);
        mi::NmcResult r = mi::nmc_estimate(*model, xi, n_outer, m_inner, seed);
        return py::make_tuple(r.value, r.std_error);
      },
      py::arg("model"), py::arg("xi"), py::arg("n_outer"), py::arg("m_inner"), py::arg("seed"));

  // critic network
  py::class_<nn::Mlp>(m, "Mlp")
      .def_readonly("layer_sizes", &nn::Mlp::layer_sizes)
      .def("score", [](const nn::Mlp& mlp, const MatrixXd& inputs) { return nn::mlp_score(mlp, inputs); },
           py::arg("inputs"));
  m.def("mlp_init", &nn::mlp_init, py::arg("layer_sizes"), py::arg("seed"));

  // gradient-free design gradients
  m.def(
      "es_gradient",
      [](const std::function<double(const VectorXd&)>& f, const VectorXd& x, double sigma,
         int num_pairs, std::uint64_t seed) { return es::es_gradient(f, x, sigma, num_pairs, seed); },
      py::arg("f"), py::arg("x"), py::arg("sigma"), py::arg("num_pairs"), py::arg("seed"));
  m.def("ges_covariance", &es::ges_covariance_dense, py::arg("basis"), py::arg("alpha"), py::arg("n"),
        py::arg("k"));

  // simulators
  py::class_<models::Model>(m, "Model")
      .def_property_readonly("id", &models::Model::id)
      .def_property_readonly("theta_dim", &models::Model::theta_dim)
      .def("design_len", &models::Model::design_len, py::arg("measurements"))
      .def("prior_sample", &models::Model::prior_sample, py::arg("n"), py::arg("seed"))
      .def("simulate", &models::Model::simulate, py::arg("theta"), py::arg("xi"), py::arg("seed"))
      .def("loglik", &models::Model::loglik, py::arg("y"), py::arg("theta"), py::arg("xi"))
      .def("prior_logpdf", &models::Model::prior_logpdf, py::arg("theta"));
  m.def("make_model", &models::make_model, py::arg("id"));

  // experiment driver and posterior stage
  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("xi_star", &RunSummary::xi_star)
      .def_readonly("smile", &RunSummary::smile)
      .def_readonly("run_dir", &RunSummary::run_dir);
  m.def("run_from_config", &run_from_config, py::arg("config_text"),
        "parse a config, run the experiment, write artifacts, return the summary");
  m.def("posterior_from_run", &posterior_from_run, py::arg("run_dir"), py::arg("sampler") = "",
        "sample the posterior of a finished run directory");
}
