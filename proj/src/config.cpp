#include "gfbed/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace gfbed::cfg {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Parser {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;  // key -> line

  [[noreturn]] void fail(int line, const std::string& key, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key + "': " + what);
  }

  long long to_int(int line, const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      long long x = std::stoll(v, &pos);
      if (pos != v.size()) fail(line, key, "expected an integer, got '" + v + "'");
      return x;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      fail(line, key, "expected an integer, got '" + v + "'");
    }
  }

  double to_double(int line, const std::string& key, const std::string& v) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    try {
      size_t pos = 0;
      double x = std::stod(v, &pos);
      if (pos != v.size()) fail(line, key, "expected a number, got '" + v + "'");
      return x;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      fail(line, key, "expected a number, got '" + v + "'");
    }
  }

  bool to_bool(int line, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(line, key, "expected true/false, got '" + v + "'");
  }

  template <typename T, typename F>
  std::vector<T> to_list(int line, const std::string& key, const std::string& v, F conv) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(line, key, "empty list entry");
      out.push_back(conv(line, key, item));
    }
    if (out.empty()) fail(line, key, "expected a comma-separated list");
    return out;
  }

  void set(int line, const std::string& key, const std::string& value) {
    if (seen.count(key)) fail(line, key, "duplicate (first set on line " + std::to_string(seen[key]) + ")");
    seen[key] = line;

    auto i = [&] { return to_int(line, key, value); };
    auto d = [&] { return to_double(line, key, value); };

    if (key == "model") cfg.model_id = value;
    else if (key == "measurements") cfg.measurements = static_cast<int>(i());
    else if (key == "epochs") cfg.epochs = static_cast<int>(i());
    else if (key == "prior_samples") cfg.prior_samples = static_cast<int>(i());
    else if (key == "lr_psi") cfg.lr_psi = d();
    else if (key == "lr_xi") cfg.lr_xi = d();
    else if (key == "tau") cfg.tau = d();
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(i());
    else if (key == "hidden_layers")
      cfg.hidden_layers = to_list<int>(line, key, value, [this](int l, const std::string& k, const std::string& s) {
        return static_cast<int>(to_int(l, k, s));
      });
    else if (key == "es_sigma") cfg.es_sigma = d();
    else if (key == "es_pairs") cfg.es_pairs = static_cast<int>(i());
    else if (key == "es_alpha") cfg.es_alpha = d();
    else if (key == "es_k") cfg.es_k = static_cast<int>(i());
    else if (key == "optimizer") cfg.optimizer = value;
    else if (key == "threads") cfg.threads = static_cast<int>(i());
    else if (key == "out") cfg.out = value;
    else if (key == "nmc_ref") cfg.nmc_ref = to_bool(line, key, value);
    else if (key == "nmc_n") cfg.nmc_n = static_cast<int>(i());
    else if (key == "nmc_m") cfg.nmc_m = static_cast<int>(i());
    else if (key == "theta_true")
      cfg.theta_true = to_list<double>(line, key, value, [this](int l, const std::string& k, const std::string& s) {
        return to_double(l, k, s);
      });
    else if (key == "posterior_sampler") cfg.posterior_sampler = value;
    else if (key == "mh_chain_len") cfg.mh_chain_len = static_cast<int>(i());
    else if (key == "mh_burn_in") cfg.mh_burn_in = static_cast<int>(i());
    else if (key == "mh_proposal_frac") cfg.mh_proposal_frac = d();
    else if (key == "cat_pool") cfg.cat_pool = static_cast<int>(i());
    else if (key == "cat_draws") cfg.cat_draws = static_cast<int>(i());
    else if (key == "linear_bound") cfg.linear_bound = d();
    else if (key == "gamma_shape") cfg.gamma_shape = d();
    else if (key == "gamma_rate") cfg.gamma_rate = d();
    else if (key == "gamma_convention") cfg.gamma_convention = value;
    else if (key == "pk_dose") cfg.pk_dose = d();
    else if (key == "pk_t_max") cfg.pk_t_max = d();
    else if (key == "quantum_amplitude") cfg.quantum_amplitude = d();
    else fail(line, key, "unknown key");
  }
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config: key '" + key + "' " + what);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  Parser p;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = raw;
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line) + ": expected 'key = value', got '" +
                        trim(raw) + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line) + ": expected 'key = value'");
    p.set(line, key, value);
  }

  // Required keys, named individually so errors point at what is missing.
  require(p.seen.count("model") > 0, "model", "is required");
  require(p.seen.count("measurements") > 0, "measurements", "is required");
  require(p.seen.count("epochs") > 0, "epochs", "is required");
  require(p.seen.count("prior_samples") > 0, "prior_samples", "is required");
  require(p.seen.count("lr_psi") > 0, "lr_psi", "is required");
  require(p.seen.count("lr_xi") > 0, "lr_xi", "is required");
  return p.cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<int> default_hidden_layers(const std::string& model_id, int measurements) {
  if (model_id == "linear") {
    if (measurements <= 5) return {100};
    if (measurements <= 25) return {150};
    return {50, 50, 50, 50, 50};
  }
  if (model_id == "pk") {
    if (measurements < 100) return {100};
    return {50, 50, 50, 50, 50};
  }
  if (model_id == "quantum") return {200};
  throw ConfigError("unknown model '" + model_id + "'");
}

std::vector<double> default_theta_true(const std::string& model_id) {
  if (model_id == "linear") return {1.0, 4.0};
  if (model_id == "pk") return {20.0, 2.0, 0.2};
  if (model_id == "quantum") return {3.85, 1.67};
  throw ConfigError("unknown model '" + model_id + "'");
}

void resolve_config(ExperimentConfig& cfg) {
  if (cfg.model_id != "linear" && cfg.model_id != "pk" && cfg.model_id != "quantum")
    throw ConfigError("key 'model': expected linear, pk, or quantum, got '" + cfg.model_id + "'");
  require(cfg.measurements >= 1, "measurements", "must be >= 1");
  require(cfg.epochs >= 1, "epochs", "must be >= 1");
  require(cfg.prior_samples >= 2, "prior_samples", "must be >= 2");
  require(cfg.lr_psi > 0.0, "lr_psi", "must be positive");
  require(cfg.lr_xi >= 0.0, "lr_xi", "must be non-negative");
  require(cfg.tau > 0.0, "tau", "must be positive");
  require(cfg.es_sigma > 0.0, "es_sigma", "must be positive");
  require(cfg.es_alpha >= 0.0 && cfg.es_alpha <= 1.0, "es_alpha", "must lie in [0, 1]");
  require(cfg.optimizer == "saga" || cfg.optimizer == "pathwise", "optimizer",
          "must be saga or pathwise");
  require(cfg.posterior_sampler == "mh" || cfg.posterior_sampler == "categorical",
          "posterior_sampler", "must be mh or categorical");
  require(cfg.nmc_n >= 1 && cfg.nmc_m >= 1, "nmc_n", "and nmc_m must be >= 1");
  require(cfg.mh_chain_len > cfg.mh_burn_in && cfg.mh_burn_in >= 0, "mh_chain_len",
          "must exceed mh_burn_in >= 0");
  require(cfg.mh_proposal_frac > 0.0, "mh_proposal_frac", "must be positive");
  require(cfg.cat_pool >= 1 && cfg.cat_draws >= 1, "cat_pool", "and cat_draws must be >= 1");
  require(cfg.gamma_convention == "shape-rate", "gamma_convention",
          "is fixed to shape-rate in this implementation");
  require(cfg.gamma_shape > 0.0 && cfg.gamma_rate > 0.0, "gamma_shape", "and gamma_rate must be positive");
  require(cfg.linear_bound > 0.0, "linear_bound", "must be positive");
  require(cfg.pk_dose > 0.0, "pk_dose", "must be positive");
  require(cfg.pk_t_max > 0.0, "pk_t_max", "must be positive");
  require(cfg.quantum_amplitude > 0.0, "quantum_amplitude", "must be positive");
  require(cfg.threads >= 0, "threads", "must be >= 0");
  require(cfg.out.find_first_of("\n\r") == std::string::npos, "out", "must be a plain path");

  int design_len = cfg.model_id == "quantum" ? 2 * cfg.measurements : cfg.measurements;
  if (cfg.hidden_layers.empty()) cfg.hidden_layers = default_hidden_layers(cfg.model_id, cfg.measurements);
  for (int h : cfg.hidden_layers) require(h >= 1, "hidden_layers", "entries must be >= 1");
  if (cfg.es_pairs == 0) cfg.es_pairs = std::max(8, design_len / 4);
  require(cfg.es_pairs >= 1, "es_pairs", "must be >= 1");
  if (cfg.es_k == 0) cfg.es_k = std::min(10, design_len);
  require(cfg.es_k >= 1, "es_k", "must be >= 1");
  if (cfg.theta_true.empty()) cfg.theta_true = default_theta_true(cfg.model_id);
  size_t want = cfg.model_id == "pk" ? 3 : 2;
  require(cfg.theta_true.size() == want, "theta_true",
          "must have " + std::to_string(want) + " entries for model " + cfg.model_id);
  if (cfg.optimizer == "pathwise")
    require(cfg.model_id != "quantum", "optimizer",
            "pathwise needs a sampling-path gradient; the quantum model has none");
}

std::string emit_manifest(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto list_i = [](const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  auto list_d = [](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
    return s;
  };
  o << "# gfbed run manifest (re-runnable as a config)\n";
  o << "model = " << cfg.model_id << '\n';
  o << "measurements = " << cfg.measurements << '\n';
  o << "epochs = " << cfg.epochs << '\n';
  o << "prior_samples = " << cfg.prior_samples << '\n';
  o << "lr_psi = " << fmt_double(cfg.lr_psi) << '\n';
  o << "lr_xi = " << fmt_double(cfg.lr_xi) << '\n';
  o << "tau = " << fmt_double(cfg.tau) << '\n';
  o << "seed = " << cfg.seed << '\n';
  o << "hidden_layers = " << list_i(cfg.hidden_layers) << '\n';
  o << "es_sigma = " << fmt_double(cfg.es_sigma) << '\n';
  o << "es_pairs = " << cfg.es_pairs << '\n';
  o << "es_alpha = " << fmt_double(cfg.es_alpha) << '\n';
  o << "es_k = " << cfg.es_k << '\n';
  o << "optimizer = " << cfg.optimizer << '\n';
  o << "threads = " << cfg.threads << '\n';
  o << "out = " << cfg.out << '\n';
  o << "nmc_ref = " << (cfg.nmc_ref ? "true" : "false") << '\n';
  o << "nmc_n = " << cfg.nmc_n << '\n';
  o << "nmc_m = " << cfg.nmc_m << '\n';
  o << "theta_true = " << list_d(cfg.theta_true) << '\n';
  o << "posterior_sampler = " << cfg.posterior_sampler << '\n';
  o << "mh_chain_len = " << cfg.mh_chain_len << '\n';
  o << "mh_burn_in = " << cfg.mh_burn_in << '\n';
  o << "mh_proposal_frac = " << fmt_double(cfg.mh_proposal_frac) << '\n';
  o << "cat_pool = " << cfg.cat_pool << '\n';
  o << "cat_draws = " << cfg.cat_draws << '\n';
  o << "linear_bound = " << fmt_double(cfg.linear_bound) << '\n';
  o << "gamma_shape = " << fmt_double(cfg.gamma_shape) << '\n';
  o << "gamma_rate = " << fmt_double(cfg.gamma_rate) << '\n';
  o << "gamma_convention = " << cfg.gamma_convention << '\n';
  o << "pk_dose = " << fmt_double(cfg.pk_dose) << '\n';
  o << "pk_t_max = " << fmt_double(cfg.pk_t_max) << '\n';
  o << "quantum_amplitude = " << fmt_double(cfg.quantum_amplitude) << '\n';
  return o.str();
}

std::unique_ptr<models::Model> make_model(const ExperimentConfig& cfg) {
  if (cfg.model_id == "linear") {
    models::LinearModel::Options opt;
    opt.bound = cfg.linear_bound;
    opt.gamma_shape = cfg.gamma_shape;
    opt.gamma_rate = cfg.gamma_rate;
    return std::make_unique<models::LinearModel>(opt);
  }
  if (cfg.model_id == "pk") {
    models::PkModel::Options opt;
    opt.dose = cfg.pk_dose;
    opt.t_max = cfg.pk_t_max;
    return std::make_unique<models::PkModel>(opt);
  }
  if (cfg.model_id == "quantum") {
    models::RabiModel::Options opt;
    opt.amplitude = cfg.quantum_amplitude;
    return std::make_unique<models::RabiModel>(opt);
  }
  throw ConfigError("unknown model '" + cfg.model_id + "'");
}

bed::BedConfig make_bed_config(const ExperimentConfig& cfg, const models::Model& model) {
  bed::BedConfig b;
  b.model = &model;
  b.measurements = cfg.measurements;
  b.epochs = cfg.epochs;
  b.prior_samples = cfg.prior_samples;
  b.lr_psi = cfg.lr_psi;
  b.lr_xi = cfg.lr_xi;
  b.tau = cfg.tau;
  b.es_cfg.sigma = cfg.es_sigma;
  b.es_cfg.num_pairs = cfg.es_pairs;
  b.es_cfg.alpha = cfg.es_alpha;
  b.es_cfg.k = cfg.es_k;
  b.hidden_layers = cfg.hidden_layers;
  b.seed = cfg.seed;
  b.threads = cfg.threads;
  return b;
}

}  // namespace gfbed::cfg
