#ifndef GFBED_POSTERIOR_HPP
#define GFBED_POSTERIOR_HPP

#include <cstdint>
#include <functional>
#include <string>

#include "gfbed/common.hpp"
#include "gfbed/models.hpp"
#include "gfbed/nn.hpp"

namespace gfbed::post {

// Everything needed to evaluate the critic-derived unnormalized posterior
// p(theta | y*, xi*) ~ clip(e^{T(theta, y*) - 1}, e^-tau, e^tau) p(theta).
struct PosteriorModel {
  nn::Mlp critic;
  nn::Standardizer input_std;
  VectorXd y_star;
  double tau = 5.0;
  const models::Model* model = nullptr;  // prior sampler, density, support

  // log clip-term alone, in [-tau, tau]; the critic input is standardized
  // with the transform frozen at training time.
  double log_weight(const VectorXd& theta) const;
};

// Unnormalized log posterior density; -infinity outside the prior support.
double posterior_logdensity(const PosteriorModel& pm, const VectorXd& theta);

struct MhResult {
  MatrixXd samples;  // post-burn-in draws, one theta per row
  double acceptance_rate = 0.0;
};

// Random-walk Metropolis with componentwise Gaussian proposals on an
// arbitrary log density. Returns the post-burn-in draws in the sampled space.
MhResult mh_chain(const std::function<double(const VectorXd&)>& logdensity, const VectorXd& init,
                  int chain_len, int burn_in, const VectorXd& proposal_scale, std::uint64_t seed);

// MH over the posterior on the prior's natural scale (log-theta for the
// pharmacokinetic model, with the Jacobian folded into the prior density);
// returned samples are mapped back to theta space.
MhResult mh_sample(const PosteriorModel& pm, int chain_len, int burn_in,
                   const VectorXd& proposal_scale, std::uint64_t seed);

// Self-normalized importance resampling of a prior pool with replacement,
// weights w_i = clip(e^{T(theta_i, y*) - 1}, e^-tau, e^tau).
MatrixXd categorical_sample(const PosteriorModel& pm, const MatrixXd& prior_pool, int m,
                            std::uint64_t seed);

struct PosteriorSummary {
  VectorXd mean;
  VectorXd stddev;  // (n-1)-denominator
  int count = 0;
  std::string sampler;
};

PosteriorSummary summarize(const MatrixXd& samples);

}  // namespace gfbed::post

#endif  // GFBED_POSTERIOR_HPP
