#ifndef GFBED_BED_HPP
#define GFBED_BED_HPP

#include <cstdint>
#include <vector>

#include "gfbed/common.hpp"
#include "gfbed/es.hpp"
#include "gfbed/mi.hpp"
#include "gfbed/models.hpp"
#include "gfbed/nn.hpp"

namespace gfbed::bed {

struct BedConfig {
  const models::Model* model = nullptr;  // non-owning
  int measurements = 1;
  int epochs = 1;         // T
  int prior_samples = 2;  // n, redrawn every epoch
  double lr_psi = 1e-4;
  double lr_xi = 1e-2;  // 0 freezes the design (pure MI estimation)
  double tau = 5.0;
  es::EsConfig es_cfg;
  std::vector<int> hidden_layers;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;         // 1-based
  double smile = 0.0;    // bound at the pre-update (design, critic) pair
  VectorXd design;       // design after this epoch's projected ascent step
  double grad_norm_xi = 0.0;
  double grad_norm_psi = 0.0;
  double wall_seconds = 0.0;
};

struct BedTrace {
  std::vector<EpochRecord> records;
};

struct BedResult {
  models::DesignVector xi_star;
  nn::Mlp critic;
  nn::Standardizer input_std;
  BedTrace trace;
};

// Per-coordinate clamp into the domain box; idempotent.
VectorXd project_design(const VectorXd& xi, const models::DesignDomain& domain);
models::DesignVector project_design(const models::DesignVector& xi);

// Simultaneous ascent: every epoch redraws the prior batch, simulates at the
// current design, evaluates the smile bound, takes a guided-ES approximate
// step over the design (smoothing applied in box-normalized coordinates) and
// an exact Adam step over the critic. Fully deterministic given the seed.
BedResult run_saga_bed(const BedConfig& config);

// Same loop with the design gradient computed by the exact chain rule
// through the simulator's sampling path (common random numbers within the
// epoch). Models without a pathwise derivative are rejected.
BedResult run_pathwise_baseline(const BedConfig& config);

// d(smile)/d(xi_j) = sum_i d(smile)/d(y_ij) * dy_ij/d(xi_j), with the critic
// input gradients mapped back through the frozen standardizer. Exposed for
// finite-difference verification.
VectorXd pathwise_design_grad(const nn::Mlp& mlp, const nn::Standardizer& input_std,
                              const mi::MiBatch& batch, const MatrixXd& dys, double tau);

}  // namespace gfbed::bed

#endif  // GFBED_BED_HPP
