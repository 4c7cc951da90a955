// Command-line runner for gradient-free Bayesian experimental design:
// `run` trains a design/critic pair from a config, `nmc-ref` prints a nested
// Monte Carlo reference value, `posterior` samples the critic-derived
// posterior of a finished run, `validate-config` checks a config file.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfbed/common.hpp"
#include "gfbed/config.hpp"
#include "gfbed/io.hpp"
#include "gfbed/version.hpp"

namespace {

using namespace gfbed;

struct CommonFlags {
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = -1;
};

void apply_overrides(cfg::ExperimentConfig& config, const CommonFlags& flags) {
  if (!flags.out.empty()) config.out = flags.out;
  if (flags.has_seed) config.seed = flags.seed;
  if (flags.threads >= 0) config.threads = flags.threads;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_run(const std::string& config_path, const CommonFlags& flags) {
  cfg::ExperimentConfig config = cfg::parse_config_file(config_path);
  apply_overrides(config, flags);
  cfg::resolve_config(config);
  io::RunArtifacts art = io::run_experiment(config);

  const auto& records = art.result.trace.records;
  int window = std::min<int>(50, static_cast<int>(records.size()));
  double tail = 0.0;
  for (size_t i = records.size() - window; i < records.size(); ++i) tail += records[i].smile;
  tail /= window;

  std::cout << "run complete: " << records.size() << " epochs\n";
  std::cout << "  smile (mean of last " << window << "): " << fmt(tail) << '\n';
  std::cout << "  xi_star:";
  for (Eigen::Index j = 0; j < art.result.xi_star.values.size(); ++j)
    std::cout << ' ' << fmt(art.result.xi_star.values(j));
  std::cout << '\n';
  std::cout << "  trace:    " << art.trace_path << '\n';
  std::cout << "  critic:   " << art.critic_path << '\n';
  std::cout << "  manifest: " << art.manifest_path << '\n';
  return 0;
}

int cmd_nmc_ref(const std::string& config_path, const std::vector<double>& xi_values,
                const CommonFlags& flags) {
  cfg::ExperimentConfig config = cfg::parse_config_file(config_path);
  apply_overrides(config, flags);
  cfg::resolve_config(config);
  VectorXd xi = Eigen::Map<const VectorXd>(xi_values.data(), static_cast<Eigen::Index>(xi_values.size()));
  io::NmcArtifacts art = io::run_nmc_ref(config, xi);
  std::cout << "nmc_ref = " << fmt(art.value) << " (std error " << fmt(art.std_error) << ", N = "
            << config.nmc_n << ", M = " << config.nmc_m << ", seed = " << config.seed << ")\n";
  return 0;
}

int cmd_posterior(const std::string& run_dir, const std::string& sampler, const CommonFlags& flags) {
  io::PosteriorArtifacts art = io::run_posterior(run_dir, sampler, flags.seed, flags.has_seed);
  std::cout << "posterior (" << art.summary.sampler << "), " << art.summary.count << " samples";
  if (art.summary.sampler == "mh") std::cout << ", acceptance " << fmt(art.acceptance_rate);
  std::cout << '\n';
  for (Eigen::Index j = 0; j < art.summary.mean.size(); ++j)
    std::cout << "  theta_" << j << ": mean " << fmt(art.summary.mean(j)) << ", std "
              << fmt(art.summary.stddev(j)) << '\n';
  std::cout << "  samples: " << art.samples_path << '\n';
  std::cout << "  summary: " << art.summary_path << '\n';
  return 0;
}

int cmd_validate(const std::string& config_path) {
  cfg::ExperimentConfig config = cfg::parse_config_file(config_path);
  cfg::resolve_config(config);
  std::cout << "config ok\n" << cfg::emit_manifest(config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-free Bayesian experimental design for implicit simulators"};
  app.set_version_flag("--version", std::string(gfbed::kVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  std::string config_path, run_dir, sampler;
  std::vector<double> xi_values;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", config_path, "config file")->required();
    sub->add_option("--out", flags.out, "output directory (overrides config)");
    sub->add_option("--seed", flags.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { flags.has_seed = true; });
    sub->add_option("--threads", flags.threads, "worker-pool cap (0 = hardware)");
  };

  CLI::App* run = app.add_subcommand("run", "train design and critic from a config");
  add_common(run, true);

  CLI::App* nmc = app.add_subcommand("nmc-ref", "nested Monte Carlo reference MI at a design");
  add_common(nmc, true);
  nmc->add_option("--xi", xi_values, "design values")->required()->delimiter(',');

  CLI::App* posterior = app.add_subcommand("posterior", "sample the posterior of a finished run");
  posterior->add_option("run_dir", run_dir, "run directory with critic.txt and manifest.cfg")
      ->required();
  posterior->add_option("--sampler", sampler, "mh or categorical (overrides config)");
  posterior->add_option("--seed", flags.seed, "master seed (overrides config)")
      ->each([&](const std::string&) { flags.has_seed = true; });

  CLI::App* validate = app.add_subcommand("validate-config", "parse and echo a resolved config");
  validate->add_option("--config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, flags);
    if (nmc->parsed()) return cmd_nmc_ref(config_path, xi_values, flags);
    if (posterior->parsed()) return cmd_posterior(run_dir, sampler, flags);
    if (validate->parsed()) return cmd_validate(config_path);
  } catch (const gfbed::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const gfbed::UnsupportedModelError& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
