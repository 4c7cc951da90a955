#ifndef GFBED_MI_HPP
#define GFBED_MI_HPP

#include <cstdint>
#include <vector>

#include "gfbed/common.hpp"
#include "gfbed/models.hpp"
#include "gfbed/nn.hpp"

namespace gfbed::mi {

// clip(u, v, w) = max(min(u, w), v); requires v <= w.
double clip(double u, double v, double w);

// log(mean(exp(v))) with max-shift stabilization.
double log_mean_exp(const VectorXd& v);

// mean(joint) - log(mean(exp(marg))). Marginal scores come from permuted pairs.
double mine_lower_bound(const VectorXd& joint_scores, const VectorXd& marg_scores);

// mean(joint) - log(mean(clip(exp(marg), e^-tau, e^tau))). The partition term
// is clamped to [-tau, tau]; tau = +inf reproduces mine_lower_bound exactly
// (identical code path on unclipped scores).
double smile_lower_bound(const VectorXd& joint_scores, const VectorXd& marg_scores, double tau);

// Uniform random derangement of {0..n-1}: pairs theta_i with y_{perm(i)} for
// the product-of-marginals expectation without i == perm(i) leakage.
std::vector<int> marginal_pairing(int n, std::uint64_t seed);

// A simulation batch plus the derangement realizing the marginal pairing.
struct MiBatch {
  MatrixXd thetas;        // n x theta_dim
  MatrixXd ys;            // n x outcome_dim
  std::vector<int> perm;  // derangement of size n

  void validate() const;
};

// Critic input rows [theta_i, y_i] (joint) and [theta_i, y_{perm(i)}] (marginal).
void build_critic_inputs(const MiBatch& batch, MatrixXd& joint_in, MatrixXd& marg_in);

// Value plus exact gradients of the smile bound through the critic; the
// input gradients feed the pathwise baseline's chain rule. Marginal samples
// whose exp-score is clipped contribute zero gradient.
struct SmileGrads {
  double value = 0.0;
  nn::ParamGrads psi;
  MatrixXd d_joint_in;  // d(bound)/d(joint input rows)
  MatrixXd d_marg_in;
};

SmileGrads smile_grads(const nn::Mlp& mlp, const MatrixXd& joint_in, const MatrixXd& marg_in,
                       double tau);

// Gradient of smile_lower_bound with respect to the network parameters.
nn::ParamGrads smile_grad_psi(const nn::Mlp& mlp, const MiBatch& batch, double tau);

// Nested Monte Carlo reference estimator for models with a tractable
// pointwise likelihood. terms holds the per-outer-sample log ratios, so
// value = mean(terms) and std_error = std(terms)/sqrt(N).
struct NmcResult {
  double value = 0.0;
  double std_error = 0.0;
  VectorXd terms;
};

NmcResult nmc_estimate(const models::Model& model, const VectorXd& xi, int n_outer, int m_inner,
                       std::uint64_t seed);

}  // namespace gfbed::mi

#endif  // GFBED_MI_HPP
