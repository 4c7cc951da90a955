#include "gfbed/posterior.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gfbed/mi.hpp"
#include "gfbed/rng.hpp"

namespace gfbed::post {

namespace {

MatrixXd critic_input(const PosteriorModel& pm, const VectorXd& theta) {
  MatrixXd in(1, theta.size() + pm.y_star.size());
  in.row(0).head(theta.size()) = theta.transpose();
  in.row(0).tail(pm.y_star.size()) = pm.y_star.transpose();
  return in;
}

}  // namespace

double PosteriorModel::log_weight(const VectorXd& theta) const {
  MatrixXd in = input_std.apply(critic_input(*this, theta));
  double score = nn::mlp_score(critic, in)(0);
  // log clip(e^{T-1}, e^-tau, e^tau) = clip(T - 1, -tau, tau)
  return mi::clip(score - 1.0, -tau, tau);
}

double posterior_logdensity(const PosteriorModel& pm, const VectorXd& theta) {
  if (pm.model == nullptr) throw std::invalid_argument("posterior: no model attached");
  if (!pm.model->in_support(theta)) return -std::numeric_limits<double>::infinity();
  return pm.log_weight(theta) + pm.model->prior_logpdf(theta);
}

MhResult mh_chain(const std::function<double(const VectorXd&)>& logdensity, const VectorXd& init,
                  int chain_len, int burn_in, const VectorXd& proposal_scale, std::uint64_t seed) {
  if (chain_len <= burn_in || burn_in < 0)
    throw std::invalid_argument("mh_chain: need chain_len > burn_in >= 0");
  if (proposal_scale.size() != init.size() || (proposal_scale.array() <= 0.0).any())
    throw std::invalid_argument("mh_chain: proposal scales must be positive per coordinate");

  Rng rng(seed);
  VectorXd x = init;
  double lx = logdensity(x);
  if (!std::isfinite(lx)) throw std::invalid_argument("mh_chain: initial point has zero density");

  int kept = chain_len - burn_in;
  MhResult res;
  res.samples.resize(kept, init.size());
  long accepted = 0;
  for (int s = 0; s < chain_len; ++s) {
    VectorXd prop = x;
    for (Eigen::Index j = 0; j < prop.size(); ++j) prop(j) += draw_normal(rng, 0.0, proposal_scale(j));
    double lp = logdensity(prop);
    double log_u = std::log(draw_uniform(rng, std::numeric_limits<double>::min(), 1.0));
    if (lp - lx >= log_u) {
      x = std::move(prop);
      lx = lp;
      ++accepted;
    }
    if (s >= burn_in) res.samples.row(s - burn_in) = x.transpose();
  }
  if (accepted == 0) throw std::runtime_error("mh_chain: no accepted moves over the whole chain");
  res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(chain_len);
  return res;
}

MhResult mh_sample(const PosteriorModel& pm, int chain_len, int burn_in,
                   const VectorXd& proposal_scale, std::uint64_t seed) {
  if (pm.model == nullptr) throw std::invalid_argument("mh_sample: no model attached");
  const models::Model& model = *pm.model;

  auto target = [&](const VectorXd& u) -> double {
    double prior = model.prior_logpdf_natural(u);
    if (!std::isfinite(prior)) return prior;
    return pm.log_weight(model.natural_to_theta(u)) + prior;
  };

  MhResult res = mh_chain(target, model.natural_mean(), chain_len, burn_in, proposal_scale, seed);
  for (Eigen::Index i = 0; i < res.samples.rows(); ++i)
    res.samples.row(i) = model.natural_to_theta(res.samples.row(i)).transpose();
  return res;
}

MatrixXd categorical_sample(const PosteriorModel& pm, const MatrixXd& prior_pool, int m,
                            std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("categorical_sample: m must be >= 1");
  int pool = static_cast<int>(prior_pool.rows());
  if (pool < 1) throw std::invalid_argument("categorical_sample: empty prior pool");

  // Batch-score the pool against the fixed observation.
  MatrixXd in(pool, prior_pool.cols() + pm.y_star.size());
  in.leftCols(prior_pool.cols()) = prior_pool;
  in.rightCols(pm.y_star.size()) = pm.y_star.transpose().replicate(pool, 1);
  VectorXd scores = nn::mlp_score(pm.critic, pm.input_std.apply(in));

  // Clip floor keeps every weight positive, so the cumulative sum is valid.
  VectorXd cum(pool);
  double acc = 0.0;
  for (int i = 0; i < pool; ++i) {
    acc += std::exp(mi::clip(scores(i) - 1.0, -pm.tau, pm.tau));
    cum(i) = acc;
  }

  Rng rng(seed);
  MatrixXd out(m, prior_pool.cols());
  for (int s = 0; s < m; ++s) {
    double u = draw_uniform(rng, 0.0, acc);
    // first index with cum > u
    int lo = 0, hi = pool - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (cum(mid) > u)
        hi = mid;
      else
        lo = mid + 1;
    }
    out.row(s) = prior_pool.row(lo);
  }
  return out;
}

PosteriorSummary summarize(const MatrixXd& samples) {
  if (samples.rows() < 2) throw std::invalid_argument("summarize: need at least 2 samples");
  PosteriorSummary s;
  s.count = static_cast<int>(samples.rows());
  s.mean = samples.colwise().mean();
  MatrixXd centered = samples.rowwise() - s.mean.transpose();
  VectorXd var = centered.array().square().colwise().sum() / static_cast<double>(samples.rows() - 1);
  s.stddev = var.array().sqrt();
  return s;
}

}  // namespace gfbed::post
