#include "gfbed/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfbed/rng.hpp"

namespace gfbed::io {

namespace {

namespace fs = std::filesystem;

// Posterior-stage substreams, offset well away from the training loop tags.
enum Stream : std::uint64_t {
  kYStar = 101,
  kSampler = 102,
  kCatPool = 103,
  kNmc = 104,
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string format_trace_csv(const bed::BedTrace& trace) {
  std::ostringstream o;
  int d = trace.records.empty() ? 0 : static_cast<int>(trace.records.front().design.size());
  o << "epoch,smile";
  for (int j = 0; j < d; ++j) o << ",xi_" << j;
  o << ",grad_norm_xi,grad_norm_psi\n";
  for (const auto& r : trace.records) {
    o << r.epoch << ',' << fmt(r.smile);
    for (int j = 0; j < d; ++j) o << ',' << fmt(r.design(j));
    o << ',' << fmt(r.grad_norm_xi) << ',' << fmt(r.grad_norm_psi) << '\n';
  }
  return o.str();
}

std::string format_nmc_row(double value, const VectorXd& xi, int n_outer, int m_inner) {
  std::ostringstream o;
  o << "nmc_ref," << fmt(value);
  for (Eigen::Index j = 0; j < xi.size(); ++j) o << ',' << fmt(xi(j));
  o << ',' << n_outer << ',' << m_inner << '\n';
  return o.str();
}

std::string format_critic_file(const CriticFile& cf) {
  std::ostringstream o;
  o << "gfbed-critic 1\n";
  o << "model " << cf.model_id << '\n';
  o << "measurements " << cf.measurements << '\n';
  o << "tau " << fmt(cf.tau) << '\n';
  o << "xi " << cf.xi_star.size() << '\n';
  for (Eigen::Index j = 0; j < cf.xi_star.size(); ++j)
    o << fmt(cf.xi_star(j)) << (j + 1 < cf.xi_star.size() ? ' ' : '\n');
  std::ostringstream std_block, mlp_block;
  nn::save_standardizer(std_block, cf.input_std);
  nn::save_mlp(mlp_block, cf.mlp);
  o << std_block.str() << mlp_block.str();
  return o.str();
}

CriticFile parse_critic_file(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "gfbed-critic" || version != 1)
    throw std::runtime_error("critic file: bad header (expected 'gfbed-critic 1')");
  CriticFile cf;
  Eigen::Index d = 0;
  if (!(in >> tag >> cf.model_id) || tag != "model") throw std::runtime_error("critic file: missing model");
  if (!(in >> tag >> cf.measurements) || tag != "measurements" || cf.measurements < 1)
    throw std::runtime_error("critic file: missing measurements");
  if (!(in >> tag >> cf.tau) || tag != "tau" || !(cf.tau > 0.0))
    throw std::runtime_error("critic file: missing tau");
  if (!(in >> tag >> d) || tag != "xi" || d < 1) throw std::runtime_error("critic file: missing design");
  cf.xi_star.resize(d);
  for (Eigen::Index j = 0; j < d; ++j)
    if (!(in >> cf.xi_star(j))) throw std::runtime_error("critic file: truncated design");
  cf.input_std = nn::load_standardizer(in);
  cf.mlp = nn::load_mlp(in);
  return cf;
}

std::string format_samples_csv(const MatrixXd& samples) {
  std::ostringstream o;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) o << (j ? "," : "") << "theta_" << j;
  o << '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) o << (j ? "," : "") << fmt(samples(i, j));
    o << '\n';
  }
  return o.str();
}

std::string format_summary_json(const post::PosteriorSummary& summary, std::uint64_t seed,
                                double acceptance_rate) {
  std::ostringstream o;
  auto vec = [&](const VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index j = 0; j < v.size(); ++j) s += (j ? ", " : "") + fmt(v(j));
    return s + "]";
  };
  o << "{\n";
  o << "  \"sampler\": \"" << summary.sampler << "\",\n";
  o << "  \"seed\": " << seed << ",\n";
  o << "  \"count\": " << summary.count << ",\n";
  o << "  \"acceptance_rate\": " << fmt(acceptance_rate) << ",\n";
  o << "  \"mean\": " << vec(summary.mean) << ",\n";
  o << "  \"stddev\": " << vec(summary.stddev) << "\n";
  o << "}\n";
  return o.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunArtifacts run_experiment(const cfg::ExperimentConfig& config_in) {
  cfg::ExperimentConfig config = config_in;
  cfg::resolve_config(config);
  auto model = cfg::make_model(config);
  bed::BedConfig bc = cfg::make_bed_config(config, *model);

  bed::BedResult result = config.optimizer == "pathwise" ? bed::run_pathwise_baseline(bc)
                                                         : bed::run_saga_bed(bc);

  RunArtifacts art;
  art.run_dir = config.out;
  art.trace_path = (fs::path(config.out) / "trace.csv").string();
  art.critic_path = (fs::path(config.out) / "critic.txt").string();
  art.manifest_path = (fs::path(config.out) / "manifest.cfg").string();

  std::string trace_csv = format_trace_csv(result.trace);
  if (config.nmc_ref) {
    mi::NmcResult ref = mi::nmc_estimate(*model, result.xi_star.values, config.nmc_n, config.nmc_m,
                                         derive_seed(config.seed, kNmc));
    trace_csv += format_nmc_row(ref.value, result.xi_star.values, config.nmc_n, config.nmc_m);
  }
  write_file(art.trace_path, trace_csv);

  CriticFile cf;
  cf.model_id = config.model_id;
  cf.measurements = config.measurements;
  cf.tau = config.tau;
  cf.xi_star = result.xi_star.values;
  cf.input_std = result.input_std;
  cf.mlp = result.critic;
  write_file(art.critic_path, format_critic_file(cf));

  write_file(art.manifest_path, cfg::emit_manifest(config));
  art.result = std::move(result);
  return art;
}

PosteriorArtifacts run_posterior(const std::string& run_dir, const std::string& sampler_override,
                                 std::uint64_t seed_override, bool has_seed_override) {
  fs::path dir(run_dir);
  std::string manifest_path = (dir / "manifest.cfg").string();
  std::string critic_path = (dir / "critic.txt").string();
  if (!fs::exists(manifest_path))
    throw std::runtime_error("run directory '" + run_dir + "' has no manifest.cfg");
  if (!fs::exists(critic_path))
    throw std::runtime_error("run directory '" + run_dir + "' has no critic.txt");

  cfg::ExperimentConfig config = cfg::parse_config_file(manifest_path);
  cfg::resolve_config(config);
  CriticFile cf;
  try {
    cf = parse_critic_file(read_file(critic_path));
  } catch (const std::exception& e) {
    throw std::runtime_error("critic file '" + critic_path + "': " + e.what());
  }
  if (cf.model_id != config.model_id)
    throw std::runtime_error("critic file '" + critic_path + "' was trained on model '" + cf.model_id +
                             "' but the manifest says '" + config.model_id + "'");

  auto model = cfg::make_model(config);
  std::uint64_t seed = has_seed_override ? seed_override : config.seed;
  std::string sampler = sampler_override.empty() ? config.posterior_sampler : sampler_override;
  if (sampler != "mh" && sampler != "categorical")
    throw ConfigError("posterior sampler must be mh or categorical, got '" + sampler + "'");

  VectorXd theta_true = Eigen::Map<const VectorXd>(config.theta_true.data(),
                                                   static_cast<Eigen::Index>(config.theta_true.size()));
  post::PosteriorModel pm;
  pm.critic = cf.mlp;
  pm.input_std = cf.input_std;
  pm.tau = cf.tau;
  pm.model = model.get();
  pm.y_star = model->simulate(theta_true, cf.xi_star, derive_seed(seed, kYStar));

  PosteriorArtifacts art;
  if (sampler == "mh") {
    VectorXd scale = config.mh_proposal_frac * model->natural_std();
    post::MhResult mh = post::mh_sample(pm, config.mh_chain_len, config.mh_burn_in, scale,
                                        derive_seed(seed, kSampler));
    art.samples = std::move(mh.samples);
    art.acceptance_rate = mh.acceptance_rate;
  } else {
    MatrixXd pool = model->prior_sample(config.cat_pool, derive_seed(seed, kCatPool));
    art.samples = post::categorical_sample(pm, pool, config.cat_draws, derive_seed(seed, kSampler));
    art.acceptance_rate = 1.0;
  }

  art.summary = post::summarize(art.samples);
  art.summary.sampler = sampler;
  art.samples_path = (dir / ("posterior_" + sampler + ".csv")).string();
  art.summary_path = (dir / ("summary_" + sampler + ".json")).string();
  write_file(art.samples_path, format_samples_csv(art.samples));
  write_file(art.summary_path, format_summary_json(art.summary, seed, art.acceptance_rate));
  return art;
}

NmcArtifacts run_nmc_ref(const cfg::ExperimentConfig& config_in, const VectorXd& xi) {
  cfg::ExperimentConfig config = config_in;
  cfg::resolve_config(config);
  auto model = cfg::make_model(config);
  mi::NmcResult ref =
      mi::nmc_estimate(*model, xi, config.nmc_n, config.nmc_m, derive_seed(config.seed, kNmc));

  NmcArtifacts art;
  art.value = ref.value;
  art.std_error = ref.std_error;
  art.row = format_nmc_row(ref.value, xi, config.nmc_n, config.nmc_m);

  fs::path dir(config.out);
  fs::create_directories(dir);
  std::string path = (dir / "nmc_ref.csv").string();
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for appending");
  out << art.row;
  return art;
}

}  // namespace gfbed::io
