#include "gfbed/es.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gfbed/rng.hpp"

namespace gfbed::es {

namespace {

VectorXd gaussian_vector(Rng& rng, int n) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = draw_normal(rng);
  return v;
}

void check_finite(double fv, const VectorXd& at, const char* side) {
  if (!std::isfinite(fv))
    throw NumericError(std::string("es: objective returned non-finite value at ") + side +
                       " perturbation [first coord " + std::to_string(at(0)) + "]");
}

// One antithetic pair: [f(x + sigma d) - f(x - sigma d)] / (2 sigma) * m.
VectorXd pair_term(const Objective& f, const VectorXd& x, double sigma, const VectorXd& dir,
                   const VectorXd& mult) {
  VectorXd xp = x + sigma * dir;
  VectorXd xm = x - sigma * dir;
  double fp = f(xp);
  check_finite(fp, xp, "+");
  double fm = f(xm);
  check_finite(fm, xm, "-");
  return ((fp - fm) / (2.0 * sigma)) * mult;
}

}  // namespace

void EsConfig::validate(int dim) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("es: sigma must be positive");
  if (num_pairs < 1) throw std::invalid_argument("es: num_pairs must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("es: alpha must lie in [0, 1]");
  if (k < 1) throw std::invalid_argument("es: k must be >= 1");
  if (dim < 1) throw std::invalid_argument("es: design dimension must be >= 1");
}

VectorXd es_gradient(const Objective& f, const VectorXd& x, double sigma, int num_pairs,
                     std::uint64_t seed, int threads) {
  if (!(sigma > 0.0)) throw std::invalid_argument("es_gradient: sigma must be positive");
  if (num_pairs < 1) throw std::invalid_argument("es_gradient: num_pairs must be >= 1");
  int n = static_cast<int>(x.size());
  std::vector<VectorXd> terms(num_pairs);
  parallel_for(num_pairs, threads, [&](int i) {
    Rng rng(derive_seed(seed, 0x65735f70616972ull, static_cast<std::uint64_t>(i)));
    VectorXd eps = gaussian_vector(rng, n);
    terms[i] = pair_term(f, x, sigma, eps, eps);
  });
  VectorXd g = VectorXd::Zero(n);
  for (const auto& t : terms) g += t;  // fixed-order reduction
  return g / static_cast<double>(num_pairs);
}

MatrixXd ges_covariance(const MatrixXd& basis_u, double alpha, int n, int k) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("ges_covariance: alpha must lie in [0, 1]");
  if (n < 1 || k < 1) throw std::invalid_argument("ges_covariance: n, k must be >= 1");
  if (basis_u.rows() != n || basis_u.cols() != k)
    throw std::invalid_argument("ges_covariance: basis must be n x k");
  MatrixXd gram = basis_u.transpose() * basis_u;
  if ((gram - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("ges_covariance: basis columns are not orthonormal");
  MatrixXd factor(n, n + k);
  factor.leftCols(n) = std::sqrt(alpha / n) * MatrixXd::Identity(n, n);
  factor.rightCols(k) = std::sqrt((1.0 - alpha) / k) * basis_u;
  return factor;
}

MatrixXd ges_covariance_dense(const MatrixXd& basis_u, double alpha, int n, int k) {
  MatrixXd a = ges_covariance(basis_u, alpha, n, k);
  return a * a.transpose();
}

VectorXd ges_gradient(const Objective& f, const VectorXd& x, const EsConfig& config, GesState& state,
                      std::uint64_t seed, int threads) {
  int n = static_cast<int>(x.size());
  config.validate(n);
  int r = state.rank();
  if (r > 0 && state.basis.rows() != n)
    throw std::invalid_argument("ges_gradient: state basis dimension mismatch");

  const int p = config.num_pairs;
  VectorXd g;

  bool subspace_active = r > 0 && config.alpha < 1.0 && (p >= 2 || config.alpha == 0.0);
  if (!subspace_active) {
    g = es_gradient(f, x, config.sigma, p, seed, threads);
  } else {
    // Validate the stratum shapes against the covariance contract.
    (void)ges_covariance(state.basis, config.alpha, n, r);

    int p_full = static_cast<int>(std::lround(config.alpha * p));
    if (config.alpha > 0.0) p_full = std::max(p_full, 1);
    p_full = std::min(p_full, p - 1);
    if (config.alpha == 0.0) p_full = 0;
    if (r >= n) p_full = 0;  // basis spans the whole space, complement is empty
    int p_sub = p - p_full;

    const MatrixXd& u = state.basis;
    std::vector<VectorXd> terms(p);
    parallel_for(p, threads, [&](int i) {
      Rng rng(derive_seed(seed, 0x65735f70616972ull, static_cast<std::uint64_t>(i)));
      if (i < p_full) {
        // Complement stratum: isotropic draw projected off the basis.
        VectorXd z = gaussian_vector(rng, n);
        VectorXd eps = z - u * (u.transpose() * z);
        terms[i] = pair_term(f, x, config.sigma, eps, eps);
      } else {
        // Subspace stratum: draw within span(U).
        VectorXd w = gaussian_vector(rng, r);
        VectorXd eps = u * w;
        terms[i] = pair_term(f, x, config.sigma, eps, eps);
      }
    });
    g = VectorXd::Zero(n);
    if (p_full > 0) {
      VectorXd gf = VectorXd::Zero(n);
      for (int i = 0; i < p_full; ++i) gf += terms[i];
      g += gf / static_cast<double>(p_full);
    }
    VectorXd gs = VectorXd::Zero(n);
    for (int i = p_full; i < p; ++i) gs += terms[i];
    g += gs / static_cast<double>(p_sub);
  }

  subspace_update(state, g, config.k);
  return g;
}

void subspace_update(GesState& state, const VectorXd& new_grad, int k) {
  if (k < 1) throw std::invalid_argument("subspace_update: k must be >= 1");
  if (!state.history.empty() && state.history.front().size() != new_grad.size())
    throw std::invalid_argument("subspace_update: gradient dimension mismatch");
  state.history.push_back(new_grad);
  while (static_cast<int>(state.history.size()) > k) state.history.pop_front();

  // Modified Gram-Schmidt, newest surrogate first.
  int n = static_cast<int>(new_grad.size());
  MatrixXd basis(n, static_cast<int>(state.history.size()));
  int cols = 0;
  for (auto it = state.history.rbegin(); it != state.history.rend(); ++it) {
    VectorXd v = *it;
    for (int c = 0; c < cols; ++c) v -= basis.col(c).dot(v) * basis.col(c);
    // second pass for numerical orthogonality
    for (int c = 0; c < cols; ++c) v -= basis.col(c).dot(v) * basis.col(c);
    double norm = v.norm();
    if (norm >= 1e-12) basis.col(cols++) = v / norm;
  }
  state.basis = basis.leftCols(cols);
}

}  // namespace gfbed::es
