#ifndef GFBED_CONFIG_HPP
#define GFBED_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gfbed/bed.hpp"
#include "gfbed/common.hpp"
#include "gfbed/models.hpp"

namespace gfbed::cfg {

// One experiment, parsed from a flat `key = value` config file. Unknown keys
// are rejected with their line number; required keys have no defaults.
struct ExperimentConfig {
  // required
  std::string model_id;
  int measurements = 0;
  int epochs = 0;
  int prior_samples = 0;
  double lr_psi = 0.0;
  double lr_xi = -1.0;

  // optimization (defaults follow the reference experiments)
  double tau = 5.0;
  std::uint64_t seed = 1;
  std::vector<int> hidden_layers;  // empty -> per-model default
  double es_sigma = 0.01;          // in box-normalized design units
  int es_pairs = 0;                // 0 -> max(8, design_len / 4)
  double es_alpha = 0.5;
  int es_k = 0;  // 0 -> min(10, design_len)
  std::string optimizer = "saga";  // saga | pathwise
  int threads = 0;                 // 0 -> hardware concurrency

  // outputs
  std::string out = "runs/out";

  // reference estimator
  bool nmc_ref = false;
  int nmc_n = 1000;
  int nmc_m = 1000;

  // posterior stage
  std::vector<double> theta_true;  // empty -> per-model default
  std::string posterior_sampler = "mh";
  int mh_chain_len = 50000;
  int mh_burn_in = 10000;
  double mh_proposal_frac = 0.1;  // of the prior std, per coordinate
  int cat_pool = 50000;
  int cat_draws = 10000;

  // model constants
  double linear_bound = 10.0;
  double gamma_shape = 2.0;
  double gamma_rate = 2.0;
  std::string gamma_convention = "shape-rate";
  double pk_dose = 400.0;
  double pk_t_max = 24.0;
  double quantum_amplitude = 100.0;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Checks ranges and fills the derived defaults (layers, theta_true, es
// pairs/k) in place. Throws ConfigError naming the offending key.
void resolve_config(ExperimentConfig& cfg);

// Fully-resolved `key = value` echo; parses back to an identical config, so
// the manifest alone reproduces the run.
std::string emit_manifest(const ExperimentConfig& cfg);

std::unique_ptr<models::Model> make_model(const ExperimentConfig& cfg);
bed::BedConfig make_bed_config(const ExperimentConfig& cfg, const models::Model& model);

std::vector<int> default_hidden_layers(const std::string& model_id, int measurements);
std::vector<double> default_theta_true(const std::string& model_id);

}  // namespace gfbed::cfg

#endif  // GFBED_CONFIG_HPP
