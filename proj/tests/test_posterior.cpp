#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "gfbed/io.hpp"
#include "gfbed/posterior.hpp"
#include "gfbed/rng.hpp"

using namespace gfbed;
using namespace gfbed::post;

namespace {

// Critic emitting a constant score c regardless of input (zero hidden
// weights, output bias c through an identity output layer).
nn::Mlp constant_critic(int input_dim, double c) {
  nn::Mlp mlp = nn::mlp_init({input_dim, 4, 1}, 0);
  for (auto& w : mlp.weights) w.setZero();
  for (auto& b : mlp.biases) b.setZero();
  mlp.biases.back()(0) = c;
  return mlp;
}

nn::Standardizer identity_std(int dim) {
  nn::Standardizer s;
  s.mean = VectorXd::Zero(dim);
  s.stddev = VectorXd::Ones(dim);
  return s;
}

PosteriorModel make_pm(const models::Model& model, int input_dim, double critic_value, double tau) {
  PosteriorModel pm;
  pm.critic = constant_critic(input_dim, critic_value);
  pm.input_std = identity_std(input_dim);
  pm.y_star = VectorXd::Zero(input_dim - model.theta_dim());
  pm.tau = tau;
  pm.model = &model;
  return pm;
}

// Batch-means standard error for a correlated chain.
double batch_means_se(const VectorXd& x, int n_batches = 50) {
  int len = static_cast<int>(x.size()) / n_batches;
  VectorXd means(n_batches);
  for (int b = 0; b < n_batches; ++b) means(b) = x.segment(b * len, len).mean();
  double m = means.mean();
  double var = (means.array() - m).square().sum() / (n_batches - 1);
  return std::sqrt(var / n_batches);
}

}  // namespace

TEST_CASE("posterior_logdensity clip-term arithmetic") {
  models::LinearModel model;
  VectorXd theta(2);
  theta << 0.5, -1.0;

  // constant critic inside the band: posterior = prior exactly
  PosteriorModel pm = make_pm(model, 3, 2.0, 5.0);
  CHECK(posterior_logdensity(pm, theta) - model.prior_logpdf(theta) ==
        doctest::Approx(1.0).epsilon(1e-13));  // clip(2 - 1) = 1

  // critic score exactly 1: weight term zero
  pm.critic = constant_critic(3, 1.0);
  CHECK(posterior_logdensity(pm, theta) == doctest::Approx(model.prior_logpdf(theta)).epsilon(1e-13));

  // tau = 0.5, score 10: saturated at 0.5
  pm.critic = constant_critic(3, 10.0);
  pm.tau = 0.5;
  CHECK(pm.log_weight(theta) == doctest::Approx(0.5).epsilon(1e-13));

  // clip band bound for arbitrary critics
  for (double c : {-30.0, -2.0, 0.0, 3.0, 40.0}) {
    pm.critic = constant_critic(3, c);
    pm.tau = 5.0;
    double w = pm.log_weight(theta);
    CHECK(w >= -5.0);
    CHECK(w <= 5.0);
  }
}

TEST_CASE("posterior_logdensity rejects out-of-support theta with -inf") {
  models::PkModel model;
  PosteriorModel pm = make_pm(model, 5, 0.0, 5.0);
  VectorXd bad(3);
  bad << 20.0, 0.1, 0.2;  // ka <= ke
  CHECK(posterior_logdensity(pm, bad) == -std::numeric_limits<double>::infinity());
  VectorXd good(3);
  good << 20.0, 1.0, 0.1;
  CHECK(std::isfinite(posterior_logdensity(pm, good)));
}

TEST_CASE("mh_chain recovers a standard normal target") {
  auto logdensity = [](const VectorXd& x) { return -0.5 * x.squaredNorm(); };
  MhResult res = mh_chain(logdensity, VectorXd::Zero(1), 100000, 10000, VectorXd::Constant(1, 1.0), 7);
  VectorXd x = res.samples.col(0);
  double mean = x.mean();
  double var = (x.array() - mean).square().sum() / (x.size() - 1);
  CHECK(std::abs(mean) <= 3.0 * batch_means_se(x));
  CHECK(var == doctest::Approx(1.0).epsilon(0.1));
  CHECK(res.acceptance_rate > 0.2);
  CHECK(res.acceptance_rate < 0.9);
}

TEST_CASE("mh_chain accepts everything as the proposal scale vanishes") {
  auto logdensity = [](const VectorXd& x) { return -0.5 * x.squaredNorm(); };
  MhResult res = mh_chain(logdensity, VectorXd::Zero(2), 4000, 0, VectorXd::Constant(2, 1e-12), 5);
  CHECK(res.acceptance_rate > 0.999);
  // and the chain barely moves
  CHECK((res.samples.row(res.samples.rows() - 1).cwiseAbs().maxCoeff()) < 1e-8);
}

TEST_CASE("mh_chain diagnostics on a chain that can never move") {
  // density is finite only at the exact init point
  VectorXd init = VectorXd::Zero(1);
  auto spike = [&](const VectorXd& x) {
    return x == init ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(mh_chain(spike, init, 200, 0, VectorXd::Constant(1, 1.0), 3), std::runtime_error);
  auto fine = [](const VectorXd&) { return 0.0; };
  CHECK_THROWS_AS(mh_chain(fine, init, 100, 100, VectorXd::Constant(1, 1.0), 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(mh_chain(fine, init, 100, 0, VectorXd::Constant(1, 0.0), 3), std::invalid_argument);
}

TEST_CASE("discrete 3-state analogue of the MH kernel matches enumeration") {
  // random-walk MH over states {0,1,2} with unnormalized weights w;
  // stationary law is w / sum(w)
  VectorXd w(3);
  w << 1.0, 3.0, 0.5;
  Rng rng(99);
  int state = 0;
  std::map<int, long> counts;
  long steps = 300000;
  for (long s = 0; s < steps; ++s) {
    int prop = static_cast<int>(draw_index(rng, 3));
    double a = w(prop) / w(state);
    if (a >= 1.0 || draw_uniform(rng, 0.0, 1.0) < a) state = prop;
    counts[state]++;
  }
  double total = w.sum();
  for (int k = 0; k < 3; ++k) {
    double p = w(k) / total;
    double freq = double(counts[k]) / steps;
    double se = std::sqrt(p * (1 - p) / steps);
    CHECK(std::abs(freq - p) <= 5.0 * se);  // correlated chain, generous band
  }
}

TEST_CASE("mh_sample maps pk chains back from log space") {
  models::PkModel model;
  PosteriorModel pm = make_pm(model, 13, 1.0, 5.0);  // flat weight: posterior = prior
  VectorXd scale = 0.25 * model.natural_std();
  MhResult res = mh_sample(pm, 20000, 2000, scale, 11);
  REQUIRE(res.samples.cols() == 3);
  // every draw respects the support
  for (int i = 0; i < res.samples.rows(); ++i)
    CHECK(model.in_support(res.samples.row(i)));
  // flat-weight posterior = prior: median of V near 20
  VectorXd v = res.samples.col(0);
  std::vector<double> vs(v.data(), v.data() + v.size());
  std::nth_element(vs.begin(), vs.begin() + vs.size() / 2, vs.end());
  CHECK(vs[vs.size() / 2] == doctest::Approx(20.0).epsilon(0.05));
}

TEST_CASE("categorical_sample: uniform for constant critic, ratio e:1 for a two-pool") {
  models::LinearModel model;
  PosteriorModel pm = make_pm(model, 3, 1.0, 5.0);

  MatrixXd pool(2, 2);
  pool << 0.0, 0.0,
          1.0, 1.0;
  MatrixXd picked = categorical_sample(pm, pool, 100000, 12);
  double frac0 = (picked.col(0).array() == 0.0).cast<double>().mean();
  double se = std::sqrt(0.25 / picked.rows());
  CHECK(std::abs(frac0 - 0.5) <= 3.0 * se);

  // scores 2 and 1 give clip weights e^1 and e^0: pick ratio e : 1
  nn::Mlp critic = nn::mlp_init({3, 1}, 0);
  critic.weights[0].setZero();
  critic.weights[0](0, 0) = 1.0;  // score = theta_0
  critic.biases[0](0) = 1.0;      // scores: theta_0 + 1 -> {1, 2}
  pm.critic = critic;
  MatrixXd picked2 = categorical_sample(pm, pool, 100000, 13);
  double p_expected = std::exp(1.0) / (std::exp(1.0) + 1.0);
  double frac1 = (picked2.col(0).array() == 1.0).cast<double>().mean();
  double se2 = std::sqrt(p_expected * (1 - p_expected) / picked2.rows());
  CHECK(std::abs(frac1 - p_expected) <= 3.0 * se2);
}

TEST_CASE("categorical_sample degenerates under one dominant weight") {
  models::LinearModel model;
  PosteriorModel pm = make_pm(model, 3, 0.0, 50.0);
  nn::Mlp critic = nn::mlp_init({3, 1}, 0);
  critic.weights[0].setZero();
  critic.weights[0](0, 0) = 30.0;  // theta_0 = 1 scores 30, others 0
  pm.critic = critic;
  pm.tau = 50.0;

  MatrixXd pool = MatrixXd::Zero(64, 2);
  pool(7, 0) = 1.0;
  MatrixXd picked = categorical_sample(pm, pool, 64, 5);
  CHECK((picked.col(0).array() == 1.0).cast<double>().mean() > 0.99);
}

TEST_CASE("summarize hand values and errors") {
  MatrixXd s(2, 2);
  s << 0.0, 0.0,
       2.0, 2.0;
  PosteriorSummary sum = summarize(s);
  CHECK(sum.mean(0) == doctest::Approx(1.0));
  CHECK(sum.mean(1) == doctest::Approx(1.0));
  CHECK(sum.stddev(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(sum.stddev(1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(sum.count == 2);

  MatrixXd c = MatrixXd::Constant(10, 1, 3.0);
  CHECK(summarize(c).stddev(0) == 0.0);

  CHECK_THROWS_AS(summarize(MatrixXd::Zero(1, 2)), std::invalid_argument);
}

TEST_CASE("samplers agree on a smooth synthetic posterior (3-bin chi-square)") {
  // small trained-looking critic: smooth in theta, fixed y*
  models::LinearModel model;
  PosteriorModel pm;
  pm.critic = nn::mlp_init({3, 16, 1}, 21);
  pm.critic.weights[1] *= 3.0;  // sharpen so the weight varies over the prior
  pm.input_std = identity_std(3);
  pm.y_star = VectorXd::Constant(1, 2.0);
  pm.tau = 5.0;
  pm.model = &model;

  // full-prior-scale proposals mix fast on this wide synthetic posterior;
  // thinning keeps the homogeneity test close to its nominal law
  MhResult mh = mh_sample(pm, 60000, 10000, model.natural_std(), 31);
  MatrixXd pool = model.prior_sample(60000, 32);
  MatrixXd cat = categorical_sample(pm, pool, 1250, 33);

  int thin = 40;
  MatrixXd mh_thin(mh.samples.rows() / thin, mh.samples.cols());
  for (int i = 0; i < mh_thin.rows(); ++i) mh_thin.row(i) = mh.samples.row(i * thin);

  for (int coord = 0; coord < 2; ++coord) {
    VectorXd a = mh_thin.col(coord);
    VectorXd b = cat.col(coord);
    std::vector<double> pooled(a.data(), a.data() + a.size());
    pooled.insert(pooled.end(), b.data(), b.data() + b.size());
    std::sort(pooled.begin(), pooled.end());
    double t1 = pooled[pooled.size() / 3];
    double t2 = pooled[2 * pooled.size() / 3];
    auto bin = [&](double v) { return v < t1 ? 0 : (v < t2 ? 1 : 2); };
    double na[3] = {0, 0, 0}, nb[3] = {0, 0, 0};
    for (double v : a) na[bin(v)] += 1;
    for (double v : b) nb[bin(v)] += 1;
    double chi2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      double tot = na[k] + nb[k];
      double ea = tot * a.size() / double(pooled.size());
      double eb = tot * b.size() / double(pooled.size());
      chi2 += (na[k] - ea) * (na[k] - ea) / ea + (nb[k] - eb) * (nb[k] - eb) / eb;
    }
    CHECK(chi2 < 9.21034);  // chi-square df=2 critical value at p = 0.01
  }
}

TEST_CASE("stored critics round-trip the standardizer and density exactly") {
  models::LinearModel model;
  nn::Mlp critic = nn::mlp_init({3, 8, 1}, 5);
  MatrixXd fitdata(20, 3);
  Rng rng(6);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j) fitdata(i, j) = draw_normal(rng, 1.0, 2.0);
  nn::Standardizer stdz = nn::fit_standardizer(fitdata);

  io::CriticFile cf;
  cf.model_id = "linear";
  cf.measurements = 1;
  cf.tau = 5.0;
  cf.xi_star = VectorXd::Constant(1, 9.5);
  cf.input_std = stdz;
  cf.mlp = critic;
  io::CriticFile back = io::parse_critic_file(io::format_critic_file(cf));

  CHECK(back.input_std.mean == stdz.mean);
  CHECK(back.input_std.stddev == stdz.stddev);
  CHECK(back.xi_star == cf.xi_star);

  PosteriorModel a{critic, stdz, VectorXd::Constant(1, 0.5), 5.0, &model};
  PosteriorModel b{back.mlp, back.input_std, VectorXd::Constant(1, 0.5), back.tau, &model};
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd theta(2);
    theta << draw_normal(rng, 0, 3), draw_normal(rng, 0, 3);
    CHECK(posterior_logdensity(a, theta) == posterior_logdensity(b, theta));
  }
}
