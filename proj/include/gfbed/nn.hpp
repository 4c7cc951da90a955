#ifndef GFBED_NN_HPP
#define GFBED_NN_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gfbed/common.hpp"

namespace gfbed::nn {

// Dense feed-forward critic network: ReLU hidden layers, identity scalar
// output. weights[l] has shape (layer_sizes[l+1] x layer_sizes[l]).
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;

  int input_dim() const { return layer_sizes.front(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
};

// Per-parameter gradient tensors, shapes mirroring the Mlp they came from.
struct ParamGrads {
  std::vector<MatrixXd> d_weights;
  std::vector<VectorXd> d_biases;

  double squared_norm() const;
};

struct AdamState {
  std::vector<MatrixXd> m_weights, v_weights;
  std::vector<VectorXd> m_biases, v_biases;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Activation record from one forward pass; consumed by mlp_backward.
struct ForwardCache {
  std::vector<MatrixXd> layer_inputs;  // inputs[l] feeds layer l (batch x size_l)
  std::vector<MatrixXd> pre_acts;      // pre-activation of layer l (batch x size_{l+1})
};

// Glorot-uniform weights, zero biases; bit-reproducible for a given seed.
Mlp mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

// inputs: batch x input_dim. Returns one score per row plus the cache for a
// backward pass. Throws on dimension mismatch or non-finite input.
std::pair<VectorXd, ForwardCache> mlp_forward(const Mlp& mlp, const MatrixXd& inputs);

// Scores only, no cache retained.
VectorXd mlp_score(const Mlp& mlp, const MatrixXd& inputs);

// output_grads[i] = d(loss)/d(score_i). Returns parameter gradients summed
// over the batch and per-row gradients with respect to the inputs. The ReLU
// subgradient at exactly 0 is taken as 0.
std::pair<ParamGrads, MatrixXd> mlp_backward(const Mlp& mlp, const ForwardCache& cache,
                                             const VectorXd& output_grads);

AdamState adam_init(const Mlp& mlp);

// Standard Adam with bias correction; maximize=true ascends.
void adam_step(Mlp& mlp, const ParamGrads& grads, AdamState& state, double lr, bool maximize);

// Frozen per-coordinate affine input transform. Fitted once on the first
// simulation batch and stored with the critic so the posterior stage feeds
// the network identically scaled inputs.
struct Standardizer {
  VectorXd mean;
  VectorXd stddev;  // floored at 1 for (near-)constant coordinates

  MatrixXd apply(const MatrixXd& x) const;
  VectorXd apply_row(const VectorXd& x) const;
  int dim() const { return static_cast<int>(mean.size()); }
};

Standardizer fit_standardizer(const MatrixXd& x);

// Flat text serialization: layer sizes header followed by row-major tensors
// at full round-trip precision.
void save_mlp(std::ostream& out, const Mlp& mlp);
Mlp load_mlp(std::istream& in);
void save_standardizer(std::ostream& out, const Standardizer& s);
Standardizer load_standardizer(std::istream& in);

}  // namespace gfbed::nn

#endif  // GFBED_NN_HPP
