#include "gfbed/nn.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gfbed/rng.hpp"

namespace gfbed::nn {

namespace {

void check_layer_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ConfigError("mlp: layer_sizes needs at least input and output");
  for (int s : sizes)
    if (s <= 0) throw ConfigError("mlp: layer sizes must be positive");
  if (sizes.back() != 1) throw ConfigError("mlp: output dimension must be 1");
}

void write_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_matrix(std::ostream& out, const MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      write_double(out, m(r, c));
    }
    out << '\n';
  }
}

MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const char* what) {
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(in >> m(r, c))) throw std::runtime_error(std::string("mlp file: truncated ") + what);
  return m;
}

}  // namespace

double ParamGrads::squared_norm() const {
  double s = 0.0;
  for (const auto& w : d_weights) s += w.squaredNorm();
  for (const auto& b : d_biases) s += b.squaredNorm();
  return s;
}

Mlp mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  check_layer_sizes(layer_sizes);
  Mlp mlp;
  mlp.layer_sizes = layer_sizes;
  int layers = static_cast<int>(layer_sizes.size()) - 1;
  mlp.weights.reserve(layers);
  mlp.biases.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    int fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
    double half_width = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(derive_seed(seed, 0x6e6e5f696e6974ull, static_cast<std::uint64_t>(l)));
    MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = draw_uniform(rng, -half_width, half_width);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(VectorXd::Zero(fan_out));
  }
  return mlp;
}

std::pair<VectorXd, ForwardCache> mlp_forward(const Mlp& mlp, const MatrixXd& inputs) {
  if (inputs.cols() != mlp.input_dim())
    throw std::invalid_argument("mlp_forward: input dim " + std::to_string(inputs.cols()) +
                                " != network input dim " + std::to_string(mlp.input_dim()));
  if (!inputs.allFinite()) throw NumericError("mlp_forward: non-finite input");

  ForwardCache cache;
  int layers = mlp.num_layers();
  cache.layer_inputs.reserve(layers);
  cache.pre_acts.reserve(layers);

  MatrixXd act = inputs;
  for (int l = 0; l < layers; ++l) {
    cache.layer_inputs.push_back(act);
    MatrixXd pre = (act * mlp.weights[l].transpose()).rowwise() + mlp.biases[l].transpose();
    cache.pre_acts.push_back(pre);
    if (l + 1 < layers)
      act = pre.cwiseMax(0.0);
    else
      act = std::move(pre);
  }
  VectorXd scores = act.col(0);
  if (!scores.allFinite()) throw NumericError("mlp_forward: non-finite score");
  return {std::move(scores), std::move(cache)};
}

VectorXd mlp_score(const Mlp& mlp, const MatrixXd& inputs) {
  return mlp_forward(mlp, inputs).first;
}

std::pair<ParamGrads, MatrixXd> mlp_backward(const Mlp& mlp, const ForwardCache& cache,
                                             const VectorXd& output_grads) {
  int layers = mlp.num_layers();
  if (static_cast<int>(cache.layer_inputs.size()) != layers ||
      static_cast<int>(cache.pre_acts.size()) != layers)
    throw std::invalid_argument("mlp_backward: cache does not match network depth");
  Eigen::Index batch = cache.layer_inputs.front().rows();
  if (output_grads.size() != batch)
    throw std::invalid_argument("mlp_backward: output_grads size does not match cached batch");
  for (int l = 0; l < layers; ++l) {
    if (cache.layer_inputs[l].cols() != mlp.layer_sizes[l] ||
        cache.pre_acts[l].cols() != mlp.layer_sizes[l + 1])
      throw std::invalid_argument("mlp_backward: cache shape mismatch at layer " + std::to_string(l));
  }

  ParamGrads grads;
  grads.d_weights.resize(layers);
  grads.d_biases.resize(layers);

  // delta = d(loss)/d(pre_act of current layer), batch x size_{l+1}
  MatrixXd delta = output_grads;  // output layer is identity
  for (int l = layers - 1; l >= 0; --l) {
    grads.d_weights[l] = delta.transpose() * cache.layer_inputs[l];
    grads.d_biases[l] = delta.colwise().sum().transpose();
    MatrixXd prev = delta * mlp.weights[l];
    if (l > 0) {
      // ReLU mask of the previous layer; subgradient at 0 is 0.
      prev = (cache.pre_acts[l - 1].array() > 0.0).select(prev, 0.0);
    }
    delta = std::move(prev);
  }
  return {std::move(grads), std::move(delta)};
}

AdamState adam_init(const Mlp& mlp) {
  AdamState s;
  for (const auto& w : mlp.weights) {
    s.m_weights.push_back(MatrixXd::Zero(w.rows(), w.cols()));
    s.v_weights.push_back(MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : mlp.biases) {
    s.m_biases.push_back(VectorXd::Zero(b.size()));
    s.v_biases.push_back(VectorXd::Zero(b.size()));
  }
  return s;
}

namespace {

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const AdamState& s, double lr, double sign) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("adam_step: gradient shape does not match parameters");
  m = s.beta1 * m + (1.0 - s.beta1) * sign * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.epsilon);
}

}  // namespace

void adam_step(Mlp& mlp, const ParamGrads& grads, AdamState& state, double lr, bool maximize) {
  if (lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
  if (grads.d_weights.size() != mlp.weights.size() || grads.d_biases.size() != mlp.biases.size())
    throw std::invalid_argument("adam_step: gradient layer count does not match network");
  state.step_count += 1;
  double sign = maximize ? -1.0 : 1.0;  // descend on -grad to ascend
  for (size_t l = 0; l < mlp.weights.size(); ++l)
    adam_update(mlp.weights[l], grads.d_weights[l], state.m_weights[l], state.v_weights[l], state, lr, sign);
  for (size_t l = 0; l < mlp.biases.size(); ++l)
    adam_update(mlp.biases[l], grads.d_biases[l], state.m_biases[l], state.v_biases[l], state, lr, sign);
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  if (x.cols() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

VectorXd Standardizer::apply_row(const VectorXd& x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
  return ((x - mean).array() / stddev.array()).matrix();
}

Standardizer fit_standardizer(const MatrixXd& x) {
  if (x.rows() < 2) throw std::invalid_argument("fit_standardizer: need at least 2 rows");
  Standardizer s;
  s.mean = x.colwise().mean();
  MatrixXd centered = x.rowwise() - s.mean.transpose();
  VectorXd var = centered.array().square().colwise().sum() / static_cast<double>(x.rows() - 1);
  s.stddev = var.array().sqrt();
  for (Eigen::Index i = 0; i < s.stddev.size(); ++i)
    if (!(s.stddev(i) > 1e-12)) s.stddev(i) = 1.0;
  return s;
}

void save_mlp(std::ostream& out, const Mlp& mlp) {
  out << "mlp " << mlp.layer_sizes.size() << '\n';
  for (size_t i = 0; i < mlp.layer_sizes.size(); ++i)
    out << mlp.layer_sizes[i] << (i + 1 < mlp.layer_sizes.size() ? ' ' : '\n');
  for (int l = 0; l < mlp.num_layers(); ++l) {
    out << "W" << l << ' ' << mlp.weights[l].rows() << ' ' << mlp.weights[l].cols() << '\n';
    write_matrix(out, mlp.weights[l]);
    out << "b" << l << ' ' << mlp.biases[l].size() << '\n';
    write_matrix(out, mlp.biases[l]);
  }
}

Mlp load_mlp(std::istream& in) {
  std::string tag;
  size_t n_sizes = 0;
  if (!(in >> tag >> n_sizes) || tag != "mlp") throw std::runtime_error("mlp file: bad header");
  if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("mlp file: implausible layer count");
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes)
    if (!(in >> s)) throw std::runtime_error("mlp file: truncated layer sizes");
  check_layer_sizes(sizes);
  Mlp mlp;
  mlp.layer_sizes = sizes;
  for (size_t l = 0; l + 1 < n_sizes; ++l) {
    Eigen::Index r = 0, c = 0, bn = 0;
    if (!(in >> tag >> r >> c) || tag != "W" + std::to_string(l) || r != sizes[l + 1] || c != sizes[l])
      throw std::runtime_error("mlp file: bad weight header at layer " + std::to_string(l));
    mlp.weights.push_back(read_matrix(in, r, c, "weights"));
    if (!(in >> tag >> bn) || tag != "b" + std::to_string(l) || bn != sizes[l + 1])
      throw std::runtime_error("mlp file: bad bias header at layer " + std::to_string(l));
    mlp.biases.push_back(read_matrix(in, bn, 1, "biases").col(0));
  }
  return mlp;
}

void save_standardizer(std::ostream& out, const Standardizer& s) {
  out << "standardizer " << s.mean.size() << '\n';
  write_matrix(out, s.mean.transpose());
  write_matrix(out, s.stddev.transpose());
}

Standardizer load_standardizer(std::istream& in) {
  std::string tag;
  Eigen::Index n = 0;
  if (!(in >> tag >> n) || tag != "standardizer" || n <= 0)
    throw std::runtime_error("standardizer: bad header");
  Standardizer s;
  s.mean = read_matrix(in, 1, n, "standardizer mean").row(0);
  s.stddev = read_matrix(in, 1, n, "standardizer stddev").row(0);
  return s;
}

}  // namespace gfbed::nn
