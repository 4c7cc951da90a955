#ifndef GFBED_IO_HPP
#define GFBED_IO_HPP

#include <string>

#include "gfbed/bed.hpp"
#include "gfbed/common.hpp"
#include "gfbed/config.hpp"
#include "gfbed/mi.hpp"
#include "gfbed/nn.hpp"
#include "gfbed/posterior.hpp"

namespace gfbed::io {

// Trace CSV: epoch,smile,xi_0..xi_{D-1},grad_norm_xi,grad_norm_psi at full
// round-trip precision. An optional labeled `nmc_ref` row reuses the same
// arity: nmc_ref,<value>,xi...,<N>,<M>.
std::string format_trace_csv(const bed::BedTrace& trace);
std::string format_nmc_row(double value, const VectorXd& xi, int n_outer, int m_inner);

// Trained-critic artifact: everything the posterior stage needs to reload.
struct CriticFile {
  std::string model_id;
  int measurements = 0;
  double tau = 0.0;
  VectorXd xi_star;
  nn::Standardizer input_std;
  nn::Mlp mlp;
};

std::string format_critic_file(const CriticFile& cf);
CriticFile parse_critic_file(const std::string& text);

std::string format_samples_csv(const MatrixXd& samples);
std::string format_summary_json(const post::PosteriorSummary& summary, std::uint64_t seed,
                                double acceptance_rate);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// --------------------------------------------------------------- drivers
// Shared by the CLI and the acceptance suite so both exercise the same
// artifact-producing code path.

struct RunArtifacts {
  std::string run_dir;
  std::string trace_path;
  std::string critic_path;
  std::string manifest_path;
  bed::BedResult result;
};

// Executes the configured experiment and writes trace.csv, critic.txt and
// manifest.cfg under cfg.out.
RunArtifacts run_experiment(const cfg::ExperimentConfig& config);

struct PosteriorArtifacts {
  std::string samples_path;
  std::string summary_path;
  post::PosteriorSummary summary;
  double acceptance_rate = 0.0;  // 1 for categorical resampling
  MatrixXd samples;
};

// Loads critic.txt + manifest.cfg from run_dir, generates y* at xi_star from
// theta_true, runs the requested sampler and writes the samples/summary.
PosteriorArtifacts run_posterior(const std::string& run_dir, const std::string& sampler_override,
                                 std::uint64_t seed_override = 0, bool has_seed_override = false);

struct NmcArtifacts {
  double value = 0.0;
  double std_error = 0.0;
  std::string row;
};

// Reference estimate at the given design; appends a labeled row to
// nmc_ref.csv in the output directory.
NmcArtifacts run_nmc_ref(const cfg::ExperimentConfig& config, const VectorXd& xi);

}  // namespace gfbed::io

#endif  // GFBED_IO_HPP
