#include "gfbed/mi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gfbed/rng.hpp"

namespace gfbed::mi {

double clip(double u, double v, double w) {
  if (v > w) throw std::invalid_argument("clip: lower bound exceeds upper bound");
  return std::max(std::min(u, w), v);
}

double log_mean_exp(const VectorXd& v) {
  if (v.size() == 0) throw std::invalid_argument("log_mean_exp: empty batch");
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = (v.array() - m).exp().sum();
  return m + std::log(s / static_cast<double>(v.size()));
}

double mine_lower_bound(const VectorXd& joint_scores, const VectorXd& marg_scores) {
  if (joint_scores.size() == 0 || marg_scores.size() == 0)
    throw std::invalid_argument("mine_lower_bound: empty batch");
  return joint_scores.mean() - log_mean_exp(marg_scores);
}

double smile_lower_bound(const VectorXd& joint_scores, const VectorXd& marg_scores, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("smile_lower_bound: tau must be positive");
  if (joint_scores.size() == 0 || marg_scores.size() == 0)
    throw std::invalid_argument("smile_lower_bound: empty batch");
  // clip(exp(s), e^-tau, e^tau) = exp(clip(s, -tau, tau)); clipping in score
  // space keeps the log-mean-exp path shared with the MINE bound.
  VectorXd clipped = marg_scores.cwiseMax(-tau).cwiseMin(tau);
  return joint_scores.mean() - log_mean_exp(clipped);
}

std::vector<int> marginal_pairing(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("marginal_pairing: need n >= 2");
  std::vector<int> perm(n);
  Rng rng(seed);
  for (;;) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(draw_index(rng, static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    bool derangement = true;
    for (int i = 0; i < n; ++i)
      if (perm[i] == i) {
        derangement = false;
        break;
      }
    if (derangement) return perm;  // rejection keeps the law uniform over derangements
  }
}

void MiBatch::validate() const {
  int n = static_cast<int>(thetas.rows());
  if (n < 2) throw std::invalid_argument("MiBatch: need at least 2 samples");
  if (ys.rows() != n) throw std::invalid_argument("MiBatch: thetas/ys length mismatch");
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("MiBatch: perm length mismatch");
  std::vector<char> seen(perm.size(), 0);
  for (int i = 0; i < n; ++i) {
    if (perm[i] < 0 || perm[i] >= n || seen[perm[i]]) throw std::invalid_argument("MiBatch: perm is not a permutation");
    if (perm[i] == i) throw std::invalid_argument("MiBatch: perm has a fixed point");
    seen[perm[i]] = 1;
  }
}

void build_critic_inputs(const MiBatch& batch, MatrixXd& joint_in, MatrixXd& marg_in) {
  batch.validate();
  Eigen::Index n = batch.thetas.rows();
  Eigen::Index dt = batch.thetas.cols(), dy = batch.ys.cols();
  joint_in.resize(n, dt + dy);
  marg_in.resize(n, dt + dy);
  joint_in.leftCols(dt) = batch.thetas;
  joint_in.rightCols(dy) = batch.ys;
  marg_in.leftCols(dt) = batch.thetas;
  for (Eigen::Index i = 0; i < n; ++i) marg_in.row(i).tail(dy) = batch.ys.row(batch.perm[i]);
}

SmileGrads smile_grads(const nn::Mlp& mlp, const MatrixXd& joint_in, const MatrixXd& marg_in,
                       double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("smile_grads: tau must be positive");
  auto [joint_scores, joint_cache] = nn::mlp_forward(mlp, joint_in);
  auto [marg_scores, marg_cache] = nn::mlp_forward(mlp, marg_in);
  Eigen::Index n = joint_scores.size();

  SmileGrads out;
  out.value = smile_lower_bound(joint_scores, marg_scores, tau);

  // d(bound)/d(joint score_i) = 1/n.
  VectorXd joint_og = VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  // Marginal term: -log(mean(exp(clipped))). Out-of-band samples sit on the
  // flat part of the clip and get zero gradient; in-band ones get the
  // softmax of the clipped scores.
  VectorXd clipped = marg_scores.cwiseMax(-tau).cwiseMin(tau);
  double m = clipped.maxCoeff();
  VectorXd soft = (clipped.array() - m).exp();
  soft /= soft.sum();
  VectorXd marg_og(n);
  for (Eigen::Index i = 0; i < n; ++i)
    marg_og(i) = (marg_scores(i) > -tau && marg_scores(i) < tau) ? -soft(i) : 0.0;

  auto [joint_pg, joint_ig] = nn::mlp_backward(mlp, joint_cache, joint_og);
  auto [marg_pg, marg_ig] = nn::mlp_backward(mlp, marg_cache, marg_og);

  out.psi = std::move(joint_pg);
  for (size_t l = 0; l < out.psi.d_weights.size(); ++l) {
    out.psi.d_weights[l] += marg_pg.d_weights[l];
    out.psi.d_biases[l] += marg_pg.d_biases[l];
  }
  out.d_joint_in = std::move(joint_ig);
  out.d_marg_in = std::move(marg_ig);
  return out;
}

nn::ParamGrads smile_grad_psi(const nn::Mlp& mlp, const MiBatch& batch, double tau) {
  MatrixXd joint_in, marg_in;
  build_critic_inputs(batch, joint_in, marg_in);
  return smile_grads(mlp, joint_in, marg_in, tau).psi;
}

NmcResult nmc_estimate(const models::Model& model, const VectorXd& xi, int n_outer, int m_inner,
                       std::uint64_t seed) {
  if (!model.has_loglik())
    throw UnsupportedModelError("nmc_estimate: model '" + model.id() + "' has no tractable likelihood");
  if (n_outer < 1 || m_inner < 1) throw std::invalid_argument("nmc_estimate: N, M must be >= 1");

  MatrixXd outer_thetas = model.prior_sample(n_outer, derive_seed(seed, 1));
  NmcResult res;
  res.terms.resize(n_outer);
  for (int i = 0; i < n_outer; ++i) {
    VectorXd theta0 = outer_thetas.row(i);
    VectorXd y = model.simulate(theta0, xi, derive_seed(seed, 2, static_cast<std::uint64_t>(i)));
    MatrixXd inner = model.prior_sample(m_inner, derive_seed(seed, 3, static_cast<std::uint64_t>(i)));
    VectorXd inner_ll(m_inner);
    for (int j = 0; j < m_inner; ++j) inner_ll(j) = model.loglik(y, inner.row(j), xi);
    res.terms(i) = model.loglik(y, theta0, xi) - log_mean_exp(inner_ll);
  }
  res.value = res.terms.mean();
  double var = (res.terms.array() - res.value).square().sum() /
               std::max<double>(1.0, static_cast<double>(n_outer - 1));
  res.std_error = std::sqrt(var / static_cast<double>(n_outer));
  return res;
}

}  // namespace gfbed::mi
