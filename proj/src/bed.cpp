#include "gfbed/bed.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gfbed/rng.hpp"

namespace gfbed::bed {

namespace {

// Substream tags for the master seed.
enum Stream : std::uint64_t {
  kXiInit = 1,
  kNetInit = 2,
  kPrior = 3,
  kNoise = 4,
  kPairing = 5,
  kDesignGrad = 6,
};

VectorXd random_design(const models::DesignDomain& domain, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd xi(domain.dim());
  for (int j = 0; j < domain.dim(); ++j) xi(j) = draw_uniform(rng, domain.lo(j), domain.hi(j));
  return xi;
}

struct EpochData {
  mi::MiBatch batch;
  MatrixXd joint_raw;
  MatrixXd marg_raw;
  std::uint64_t noise_seed = 0;
};

using DesignGradFn = std::function<VectorXd(int epoch, const VectorXd& xi, const EpochData& data,
                                            const nn::Mlp& critic, const nn::Standardizer& input_std)>;

BedResult run_loop(const BedConfig& cfg, const DesignGradFn& design_grad) {
  cfg.validate();
  const models::Model& model = *cfg.model;
  const models::DesignDomain domain = model.domain(cfg.measurements);
  const int n = cfg.prior_samples;
  const int threads = resolve_threads(cfg.threads);

  std::vector<int> layers;
  layers.push_back(model.theta_dim() + domain.dim());
  for (int h : cfg.hidden_layers) layers.push_back(h);
  layers.push_back(1);

  BedResult res;
  VectorXd xi = random_design(domain, derive_seed(cfg.seed, kXiInit));
  nn::Mlp mlp = nn::mlp_init(layers, derive_seed(cfg.seed, kNetInit));
  nn::AdamState adam = nn::adam_init(mlp);
  nn::Standardizer input_std;
  res.trace.records.reserve(cfg.epochs);

  for (int t = 0; t < cfg.epochs; ++t) {
    auto tic = std::chrono::steady_clock::now();

    EpochData data;
    data.batch.thetas = model.prior_sample(n, derive_seed(cfg.seed, kPrior, t));
    data.noise_seed = derive_seed(cfg.seed, kNoise, t);
    data.batch.ys = model.simulate_batch(data.batch.thetas, xi, data.noise_seed, threads).ys;
    data.batch.perm = mi::marginal_pairing(n, derive_seed(cfg.seed, kPairing, t));
    mi::build_critic_inputs(data.batch, data.joint_raw, data.marg_raw);

    // The input transform freezes on the first simulation batch.
    if (t == 0) input_std = nn::fit_standardizer(data.joint_raw);

    auto sg = mi::smile_grads(mlp, input_std.apply(data.joint_raw), input_std.apply(data.marg_raw),
                              cfg.tau);
    if (!std::isfinite(sg.value))
      throw NumericError("bed loop: non-finite smile bound at epoch " + std::to_string(t + 1));

    VectorXd g_xi = VectorXd::Zero(domain.dim());
    if (cfg.lr_xi > 0.0) g_xi = design_grad(t, xi, data, mlp, input_std);

    EpochRecord rec;
    rec.epoch = t + 1;
    rec.smile = sg.value;
    rec.grad_norm_xi = g_xi.norm();
    rec.grad_norm_psi = std::sqrt(sg.psi.squared_norm());

    if (cfg.lr_xi > 0.0) xi = project_design(xi + cfg.lr_xi * g_xi, domain);
    nn::adam_step(mlp, sg.psi, adam, cfg.lr_psi, /*maximize=*/true);

    rec.design = xi;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    res.trace.records.push_back(std::move(rec));
  }

  res.xi_star = models::DesignVector{xi, domain};
  res.critic = std::move(mlp);
  res.input_std = std::move(input_std);
  return res;
}

}  // namespace

void BedConfig::validate() const {
  if (model == nullptr) throw ConfigError("bed: no model set");
  if (epochs < 1) throw ConfigError("bed: epochs must be >= 1");
  if (measurements < 1) throw ConfigError("bed: measurements must be >= 1");
  if (prior_samples < 2) throw ConfigError("bed: prior_samples must be >= 2");
  if (!(lr_psi > 0.0)) throw ConfigError("bed: lr_psi must be positive");
  if (lr_xi < 0.0) throw ConfigError("bed: lr_xi must be non-negative");
  if (!(tau > 0.0)) throw ConfigError("bed: tau must be positive");
  if (hidden_layers.empty()) throw ConfigError("bed: need at least one hidden layer");
  for (int h : hidden_layers)
    if (h < 1) throw ConfigError("bed: hidden layer sizes must be positive");
  es_cfg.validate(model->design_len(measurements));
}

VectorXd project_design(const VectorXd& xi, const models::DesignDomain& domain) {
  if (xi.size() != domain.lo.size()) throw std::invalid_argument("project_design: dimension mismatch");
  return xi.cwiseMax(domain.lo).cwiseMin(domain.hi);
}

models::DesignVector project_design(const models::DesignVector& xi) {
  return {project_design(xi.values, xi.domain), xi.domain};
}

BedResult run_saga_bed(const BedConfig& cfg) {
  cfg.validate();
  const models::Model& model = *cfg.model;
  const models::DesignDomain domain = model.domain(cfg.measurements);
  const VectorXd widths = domain.width();
  const int threads = resolve_threads(cfg.threads);

  // Guided-ES state lives in box-normalized coordinates so the smoothing
  // radius means the same fraction of the domain on every axis.
  auto ges_state = std::make_shared<es::GesState>();

  DesignGradFn step = [&model, domain, widths, threads, ges_state, &cfg](
                          int epoch, const VectorXd& xi, const EpochData& data,
                          const nn::Mlp& critic, const nn::Standardizer& input_std) -> VectorXd {
    Eigen::Index dy = data.batch.ys.cols();
    VectorXd u = (xi - domain.lo).cwiseQuotient(widths);

    // Re-simulates the epoch's theta batch at the perturbed design with the
    // same noise stream and pairing, scored by the frozen critic. Perturbed
    // designs are projected into the box so the closure is total.
    es::Objective f_u = [&](const VectorXd& u_pert) -> double {
      VectorXd xi_p = project_design(domain.lo + u_pert.cwiseProduct(widths), domain);
      MatrixXd ys = model.simulate_batch(data.batch.thetas, xi_p, data.noise_seed, 1).ys;
      MatrixXd joint_raw = data.joint_raw;
      MatrixXd marg_raw = data.marg_raw;
      joint_raw.rightCols(dy) = ys;
      for (Eigen::Index i = 0; i < ys.rows(); ++i)
        marg_raw.row(i).tail(dy) = ys.row(data.batch.perm[i]);
      VectorXd joint_scores = nn::mlp_score(critic, input_std.apply(joint_raw));
      VectorXd marg_scores = nn::mlp_score(critic, input_std.apply(marg_raw));
      return mi::smile_lower_bound(joint_scores, marg_scores, cfg.tau);
    };

    VectorXd g_u = es::ges_gradient(f_u, u, cfg.es_cfg, *ges_state,
                                    derive_seed(cfg.seed, kDesignGrad, epoch), threads);
    return g_u.cwiseQuotient(widths);
  };

  return run_loop(cfg, step);
}

VectorXd pathwise_design_grad(const nn::Mlp& mlp, const nn::Standardizer& input_std,
                              const mi::MiBatch& batch, const MatrixXd& dys, double tau) {
  MatrixXd joint_raw, marg_raw;
  mi::build_critic_inputs(batch, joint_raw, marg_raw);
  auto sg = mi::smile_grads(mlp, input_std.apply(joint_raw), input_std.apply(marg_raw), tau);

  Eigen::Index n = batch.thetas.rows();
  Eigen::Index dt = batch.thetas.cols();
  Eigen::Index dy = batch.ys.cols();
  if (dys.rows() != n || dys.cols() != dy)
    throw std::invalid_argument("pathwise_design_grad: dys shape mismatch");

  // d(bound)/d(raw y_ij): joint pass row i carries y_i; marginal pass row i
  // carries y_{perm(i)}. Undo the standardizer scaling per column.
  MatrixXd didy = MatrixXd::Zero(n, dy);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dy; ++j) {
      double scale = input_std.stddev(dt + j);
      didy(i, j) += sg.d_joint_in(i, dt + j) / scale;
      didy(batch.perm[i], j) += sg.d_marg_in(i, dt + j) / scale;
    }
  }

  VectorXd g(dy);
  for (Eigen::Index j = 0; j < dy; ++j) g(j) = didy.col(j).dot(dys.col(j));
  return g;
}

BedResult run_pathwise_baseline(const BedConfig& cfg) {
  cfg.validate();
  const models::Model& model = *cfg.model;
  if (!model.has_pathwise())
    throw UnsupportedModelError("pathwise baseline: model '" + model.id() +
                                "' exposes no sampling-path gradient");
  const int threads = resolve_threads(cfg.threads);

  DesignGradFn step = [&model, threads, &cfg](int /*epoch*/, const VectorXd& xi, const EpochData& data,
                                              const nn::Mlp& critic,
                                              const nn::Standardizer& input_std) -> VectorXd {
    // Re-derive the epoch's outcomes together with their design derivative
    // from the same noise stream (common random numbers).
    MatrixXd ys, dys;
    model.simulate_batch_pathwise(data.batch.thetas, xi, data.noise_seed, ys, dys, threads);
    mi::MiBatch b{data.batch.thetas, std::move(ys), data.batch.perm};
    return pathwise_design_grad(critic, input_std, b, dys, cfg.tau);
  };

  return run_loop(cfg, step);
}

}  // namespace gfbed::bed
