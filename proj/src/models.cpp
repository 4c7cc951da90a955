#include "gfbed/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gfbed/rng.hpp"

namespace gfbed::models {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

double gauss_logpdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

// Generalized Gauss-Laguerre rule for weight u^a e^{-u} via Golub-Welsch.
struct Quadrature {
  VectorXd nodes;
  VectorXd log_weights;
};

Quadrature laguerre_rule(int order, double a) {
  MatrixXd jacobi = MatrixXd::Zero(order, order);
  for (int k = 0; k < order; ++k) {
    jacobi(k, k) = 2.0 * k + a + 1.0;
    if (k + 1 < order) {
      double off = std::sqrt((k + 1.0) * (k + 1.0 + a));
      jacobi(k, k + 1) = off;
      jacobi(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(jacobi);
  Quadrature q;
  q.nodes = es.eigenvalues();
  q.log_weights.resize(order);
  double log_mu0 = std::lgamma(a + 1.0);
  for (int k = 0; k < order; ++k) {
    double v0 = es.eigenvectors()(0, k);
    q.log_weights(k) = log_mu0 + 2.0 * std::log(std::abs(v0));
  }
  return q;
}

// Fixed order; the Gamma(2,2) mass beyond the largest node is ~1e-40.
const Quadrature& gamma_quadrature() {
  static const Quadrature q = laguerre_rule(48, 1.0);
  return q;
}

double log_sum_exp_inplace(VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

bool DesignDomain::contains(const VectorXd& xi, double tol) const {
  if (xi.size() != lo.size()) return false;
  for (Eigen::Index j = 0; j < xi.size(); ++j)
    if (xi(j) < lo(j) - tol || xi(j) > hi(j) + tol) return false;
  return true;
}

double Model::loglik(const VectorXd&, const VectorXd&, const VectorXd&) const {
  throw UnsupportedModelError("model '" + id() + "' has no tractable likelihood");
}

void Model::simulate_pathwise(const VectorXd&, const VectorXd&, std::uint64_t, VectorXd&, VectorXd&) const {
  throw UnsupportedModelError("model '" + id() + "' has no pathwise design gradient");
}

SimBatch Model::simulate_batch(const MatrixXd& thetas, const VectorXd& xi, std::uint64_t seed,
                               int threads) const {
  SimBatch b;
  b.thetas = thetas;
  b.design = xi;
  b.seed = seed;
  b.ys.resize(thetas.rows(), xi.size());
  int n = static_cast<int>(thetas.rows());
  parallel_for(n, threads, [&](int i) {
    b.ys.row(static_cast<Eigen::Index>(i)) =
        simulate(thetas.row(i), xi, derive_seed(seed, static_cast<std::uint64_t>(i))).transpose();
  });
  return b;
}

void Model::simulate_batch_pathwise(const MatrixXd& thetas, const VectorXd& xi, std::uint64_t seed,
                                    MatrixXd& ys, MatrixXd& dys, int threads) const {
  int n = static_cast<int>(thetas.rows());
  ys.resize(n, xi.size());
  dys.resize(n, xi.size());
  parallel_for(n, threads, [&](int i) {
    VectorXd y, dy;
    simulate_pathwise(thetas.row(i), xi, derive_seed(seed, static_cast<std::uint64_t>(i)), y, dy);
    ys.row(i) = y.transpose();
    dys.row(i) = dy.transpose();
  });
}

// ---------------------------------------------------------------- linear

DesignDomain LinearModel::domain(int measurements) const {
  DesignDomain d;
  d.lo = VectorXd::Constant(measurements, -opt_.bound);
  d.hi = VectorXd::Constant(measurements, opt_.bound);
  return d;
}

MatrixXd LinearModel::prior_sample(int n, std::uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("prior_sample: n must be >= 1");
  MatrixXd th(n, 2);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    th(i, 0) = draw_normal(rng, 0.0, 3.0);
    th(i, 1) = draw_normal(rng, 0.0, 3.0);
  }
  return th;
}

VectorXd LinearModel::simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const {
  if (theta.size() != 2) throw std::invalid_argument("linear: theta must have 2 entries");
  if (!domain(static_cast<int>(xi.size())).contains(xi, 1e-9))
    throw std::domain_error("linear: design outside [-" + std::to_string(opt_.bound) + ", " +
                            std::to_string(opt_.bound) + "]");
  Rng rng(seed);
  VectorXd y(xi.size());
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    double v = theta(0) + theta(1) * xi(j);
    if (opt_.noise_eps) v += draw_normal(rng);
    if (opt_.noise_gamma) v += draw_gamma(rng, opt_.gamma_shape, opt_.gamma_rate);
    y(j) = v;
  }
  return y;
}

void LinearModel::simulate_pathwise(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed,
                                    VectorXd& y, VectorXd& dy_dxi) const {
  y = simulate(theta, xi, seed);
  dy_dxi = VectorXd::Constant(xi.size(), theta(1));
}

double LinearModel::loglik(const VectorXd& y, const VectorXd& theta, const VectorXd& xi) const {
  if (y.size() != xi.size()) throw std::invalid_argument("linear loglik: y/xi length mismatch");
  double total = 0.0;
  if (!opt_.noise_gamma) {
    // Degenerate convolution: pure Gaussian measurement density.
    for (Eigen::Index j = 0; j < xi.size(); ++j)
      total += gauss_logpdf(y(j), theta(0) + theta(1) * xi(j), 1.0);
    return total;
  }
  const Quadrature& q = gamma_quadrature();
  // Convolution N(mu,1) (*) Gamma(shape,rate) via nodes v_k = u_k / rate.
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    double mu = theta(0) + theta(1) * xi(j);
    VectorXd terms(q.nodes.size());
    for (Eigen::Index k = 0; k < q.nodes.size(); ++k) {
      double v = q.nodes(k) / opt_.gamma_rate;
      terms(k) = q.log_weights(k) - std::lgamma(opt_.gamma_shape) + gauss_logpdf(y(j), mu + v, 1.0);
    }
    double lj = log_sum_exp_inplace(terms);
    if (std::isnan(lj)) throw NumericError("linear loglik: quadrature produced NaN");
    total += lj;
  }
  return total;
}

double LinearModel::prior_logpdf(const VectorXd& theta) const {
  if (theta.size() != 2) return -std::numeric_limits<double>::infinity();
  return gauss_logpdf(theta(0), 0.0, 9.0) + gauss_logpdf(theta(1), 0.0, 9.0);
}

// -------------------------------------------------------------------- pk

DesignDomain PkModel::domain(int measurements) const {
  DesignDomain d;
  d.lo = VectorXd::Zero(measurements);
  d.hi = VectorXd::Constant(measurements, opt_.t_max);
  return d;
}

namespace {
const double kPkLogMean[3] = {std::log(20.0), std::log(1.0), std::log(0.1)};
constexpr double kPkLogVar = 0.05;
}  // namespace

MatrixXd PkModel::prior_sample(int n, std::uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("prior_sample: n must be >= 1");
  MatrixXd th(n, 3);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    // Redraw on the rare ka <= ke violation (prior separation makes this ~1e-13).
    for (;;) {
      double v = std::exp(draw_normal(rng, kPkLogMean[0], std::sqrt(kPkLogVar)));
      double ka = std::exp(draw_normal(rng, kPkLogMean[1], std::sqrt(kPkLogVar)));
      double ke = std::exp(draw_normal(rng, kPkLogMean[2], std::sqrt(kPkLogVar)));
      if (ka > ke) {
        th(i, 0) = v;
        th(i, 1) = ka;
        th(i, 2) = ke;
        break;
      }
    }
  }
  return th;
}

double PkModel::mean_response(const VectorXd& theta, double t) const {
  double v = theta(0), ka = theta(1), ke = theta(2);
  return opt_.dose / v * ka / (ka - ke) * (std::exp(-ke * t) - std::exp(-ka * t));
}

double PkModel::pathwise_grad(const VectorXd& theta, double t, double eps1) const {
  double v = theta(0), ka = theta(1), ke = theta(2);
  if (!(ka > ke) || !(v > 0.0)) throw std::domain_error("pk: requires V > 0 and ka > ke");
  return opt_.dose / v * ka / (ka - ke) * (ka * std::exp(-ka * t) - ke * std::exp(-ke * t)) * (1.0 + eps1);
}

VectorXd PkModel::simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const {
  VectorXd y, dy;
  simulate_pathwise(theta, xi, seed, y, dy);
  return y;
}

void PkModel::simulate_pathwise(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed,
                                VectorXd& y, VectorXd& dy_dxi) const {
  if (theta.size() != 3) throw std::invalid_argument("pk: theta must have 3 entries");
  if (!(theta(1) > theta(2))) throw std::domain_error("pk: requires ka > ke");
  if (!(theta(0) > 0.0) || !(theta(2) > 0.0)) throw std::domain_error("pk: requires V, ke > 0");
  if (!domain(static_cast<int>(xi.size())).contains(xi, 1e-9))
    throw std::domain_error("pk: sampling time outside [0, " + std::to_string(opt_.t_max) + "]");
  Rng rng(seed);
  y.resize(xi.size());
  dy_dxi.resize(xi.size());
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    double eps1 = 0.0, eps2 = 0.0;
    if (opt_.noise) {
      eps1 = draw_normal(rng, 0.0, 0.1);             // variance 0.01
      eps2 = draw_normal(rng, 0.0, std::sqrt(0.1));  // variance 0.1
    }
    y(j) = mean_response(theta, xi(j)) * (1.0 + eps1) + eps2;
    dy_dxi(j) = pathwise_grad(theta, xi(j), eps1);
  }
}

double PkModel::prior_logpdf(const VectorXd& theta) const {
  if (!in_support(theta)) return -std::numeric_limits<double>::infinity();
  double lp = 0.0;
  for (int j = 0; j < 3; ++j) {
    double lt = std::log(theta(j));
    lp += gauss_logpdf(lt, kPkLogMean[j], kPkLogVar) - lt;  // log-normal density in theta
  }
  return lp;
}

double PkModel::prior_logpdf_natural(const VectorXd& u) const {
  if (u.size() != 3) return -std::numeric_limits<double>::infinity();
  if (!(u(1) > u(2))) return -std::numeric_limits<double>::infinity();  // ka > ke
  double lp = 0.0;
  for (int j = 0; j < 3; ++j) lp += gauss_logpdf(u(j), kPkLogMean[j], kPkLogVar);
  return lp;
}

VectorXd PkModel::theta_to_natural(const VectorXd& theta) const {
  return theta.array().log().matrix();
}

VectorXd PkModel::natural_to_theta(const VectorXd& u) const {
  return u.array().exp().matrix();
}

VectorXd PkModel::natural_mean() const {
  VectorXd m(3);
  m << kPkLogMean[0], kPkLogMean[1], kPkLogMean[2];
  return m;
}

VectorXd PkModel::natural_std() const {
  return VectorXd::Constant(3, std::sqrt(kPkLogVar));
}

bool PkModel::in_support(const VectorXd& theta) const {
  return theta.size() == 3 && theta(0) > 0.0 && theta(1) > 0.0 && theta(2) > 0.0 && theta(1) > theta(2);
}

// ------------------------------------------------------------------ rabi

namespace {
constexpr double kRabiW1Lo = 0.1, kRabiW1Hi = 10.0;
constexpr double kRabiW2Lo = -10.0, kRabiW2Hi = 10.0;
constexpr int kRabiGrid = 101;

double snap(double x, double lo, double hi) {
  double step = (hi - lo) / (kRabiGrid - 1);
  double k = std::round((x - lo) / step);
  return lo + k * step;
}
}  // namespace

DesignDomain RabiModel::domain(int measurements) const {
  DesignDomain d;
  d.lo.resize(2 * measurements);
  d.hi.resize(2 * measurements);
  for (int m = 0; m < measurements; ++m) {
    d.lo(2 * m) = 0.0;
    d.hi(2 * m) = 1.0;
    d.lo(2 * m + 1) = -10.0;
    d.hi(2 * m + 1) = 10.0;
  }
  return d;
}

MatrixXd RabiModel::prior_sample(int n, std::uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("prior_sample: n must be >= 1");
  MatrixXd th(n, 2);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    th(i, 0) = draw_uniform(rng, kRabiW1Lo, kRabiW1Hi);
    th(i, 1) = draw_uniform(rng, kRabiW2Lo, kRabiW2Hi);
  }
  return th;
}

VectorXd RabiModel::simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const {
  if (theta.size() != 2) throw std::invalid_argument("rabi: theta must have 2 entries");
  if (xi.size() % 2 != 0) throw std::invalid_argument("rabi: design interleaves (t, df) pairs");
  int measurements = static_cast<int>(xi.size()) / 2;
  if (!domain(measurements).contains(xi, 1e-9))
    throw std::domain_error("rabi: design outside t in [0,1], df in [-10,10]");
  Rng rng(seed);
  VectorXd y(measurements);
  for (int m = 0; m < measurements; ++m) {
    double t = xi(2 * m), df = xi(2 * m + 1);
    if (opt_.grid_snap) {
      t = snap(t, 0.0, 1.0);
      df = snap(df, -10.0, 10.0);
    }
    double w1sq = theta(0) * theta(0);
    double d = df - theta(1);
    double omega_sq = w1sq + d * d;
    double s = std::sin(0.5 * t * std::sqrt(omega_sq));
    double signal = opt_.amplitude * (w1sq / omega_sq) * s * s;
    y(m) = signal + (opt_.noise ? draw_normal(rng) : 0.0);
  }
  return y;
}

double RabiModel::prior_logpdf(const VectorXd& theta) const {
  if (!in_support(theta)) return -std::numeric_limits<double>::infinity();
  return -std::log(kRabiW1Hi - kRabiW1Lo) - std::log(kRabiW2Hi - kRabiW2Lo);
}

VectorXd RabiModel::natural_mean() const {
  VectorXd m(2);
  m << 0.5 * (kRabiW1Lo + kRabiW1Hi), 0.5 * (kRabiW2Lo + kRabiW2Hi);
  return m;
}

VectorXd RabiModel::natural_std() const {
  VectorXd s(2);
  s << (kRabiW1Hi - kRabiW1Lo) / std::sqrt(12.0), (kRabiW2Hi - kRabiW2Lo) / std::sqrt(12.0);
  return s;
}

bool RabiModel::in_support(const VectorXd& theta) const {
  return theta.size() == 2 && theta(0) >= kRabiW1Lo && theta(0) <= kRabiW1Hi &&
         theta(1) >= kRabiW2Lo && theta(1) <= kRabiW2Hi;
}

std::unique_ptr<Model> make_model(const std::string& id) {
  if (id == "linear") return std::make_unique<LinearModel>();
  if (id == "pk") return std::make_unique<PkModel>();
  if (id == "quantum") return std::make_unique<RabiModel>();
  throw ConfigError("unknown model '" + id + "' (expected linear, pk, or quantum)");
}

}  // namespace gfbed::models
