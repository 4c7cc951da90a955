#ifndef GFBED_ES_HPP
#define GFBED_ES_HPP

#include <cstdint>
#include <deque>
#include <functional>

#include "gfbed/common.hpp"

namespace gfbed::es {

using Objective = std::function<double(const VectorXd&)>;

struct EsConfig {
  double sigma = 0.01;  // smoothing radius, in the caller's design units
  int num_pairs = 8;    // antithetic pair count P (2P objective evaluations)
  double alpha = 0.5;   // full-space vs subspace trade-off in [0, 1]
  int k = 10;           // subspace dimension cap

  void validate(int dim) const;
};

// Rolling surrogate-gradient history and the orthonormal basis it spans.
struct GesState {
  std::deque<VectorXd> history;  // at most k past surrogate gradients
  MatrixXd basis;                // n x r, column-orthonormal, r <= k

  int rank() const { return static_cast<int>(basis.cols()); }
};

// Antithetic Gaussian-smoothing gradient estimate:
//   (1 / (2 sigma P)) sum_i [f(x + sigma e_i) - f(x - sigma e_i)] e_i,
// e_i ~ N(0, I). Evaluates f exactly 2P times; deterministic given seed.
VectorXd es_gradient(const Objective& f, const VectorXd& x, double sigma, int num_pairs,
                     std::uint64_t seed, int threads = 1);

// Search covariance Sigma = (alpha/n) I + ((1-alpha)/k) U U^T as a sampler
// factor A with A A^T = Sigma (n x (n+k)); trace(Sigma) = 1 exactly.
MatrixXd ges_covariance(const MatrixXd& basis_u, double alpha, int n, int k);

// Dense Sigma for diagnostics/tests.
MatrixXd ges_covariance_dense(const MatrixXd& basis_u, double alpha, int n, int k);

// Guided estimate: the covariance's two components act as sampling strata.
// round(alpha P) pairs perturb the orthogonal complement of the basis and
// the remainder perturb within it; each stratum is averaged against its own
// directions, so the combined estimate stays unbiased for linear objectives
// while the subspace stratum carries most of the signal once the basis
// aligns. With an empty basis (or alpha = 1) every pair is a full-space
// isotropic draw and the estimate coincides with es_gradient seed-for-seed.
// The returned vector is appended to the state history as the new surrogate
// gradient and the basis is refreshed.
VectorXd ges_gradient(const Objective& f, const VectorXd& x, const EsConfig& config, GesState& state,
                      std::uint64_t seed, int threads = 1);

// Appends new_grad to the history (evicting beyond k) and rebuilds the basis
// by modified Gram-Schmidt, newest column first, dropping directions whose
// residual norm falls below 1e-12.
void subspace_update(GesState& state, const VectorXd& new_grad, int k);

}  // namespace gfbed::es

#endif  // GFBED_ES_HPP
