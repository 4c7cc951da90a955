#ifndef GFBED_MODELS_HPP
#define GFBED_MODELS_HPP

#include <cstdint>
#include <memory>
#include <string>

#include "gfbed/common.hpp"

namespace gfbed::models {

// Per-coordinate closed design box.
struct DesignDomain {
  VectorXd lo;
  VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const VectorXd& xi, double tol = 0.0) const;
  VectorXd width() const { return hi - lo; }
};

// A design and the box it must stay inside.
struct DesignVector {
  VectorXd values;
  DesignDomain domain;
};

// Paired prior/simulator draws at a fixed design. Regenerating with the
// same seed reproduces ys exactly.
struct SimBatch {
  MatrixXd thetas;  // n x theta_dim
  MatrixXd ys;      // n x design_len
  VectorXd design;
  std::uint64_t seed = 0;
};

// Forward sampler with a prior over model parameters. Likelihoods and
// pathwise design-derivatives exist only where the underlying formula
// provides them; everything else treats the model as implicit.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string id() const = 0;
  virtual int theta_dim() const = 0;
  // Length of the design vector for a given number of measurements.
  virtual int design_len(int measurements) const { return measurements; }
  virtual DesignDomain domain(int measurements) const = 0;

  virtual MatrixXd prior_sample(int n, std::uint64_t seed) const = 0;
  virtual VectorXd simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const = 0;

  virtual bool has_loglik() const { return false; }
  virtual double loglik(const VectorXd& y, const VectorXd& theta, const VectorXd& xi) const;

  virtual bool has_pathwise() const { return false; }
  // y and dy/dxi (per-coordinate, at the drawn noise) in one pass so the
  // pathwise baseline reuses the exact noise realization of the outcome.
  virtual void simulate_pathwise(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed,
                                 VectorXd& y, VectorXd& dy_dxi) const;

  // Prior density over theta and over the sampler's natural coordinates
  // (log-scale for the pharmacokinetic model, identity otherwise). The
  // natural-space density carries the change-of-variables Jacobian.
  virtual double prior_logpdf(const VectorXd& theta) const = 0;
  virtual double prior_logpdf_natural(const VectorXd& u) const = 0;
  virtual VectorXd theta_to_natural(const VectorXd& theta) const { return theta; }
  virtual VectorXd natural_to_theta(const VectorXd& u) const { return u; }
  virtual VectorXd natural_mean() const = 0;
  virtual VectorXd natural_std() const = 0;
  virtual bool in_support(const VectorXd& theta) const = 0;

  // Rows simulated with per-row derived seeds: row i uses derive_seed(seed, i),
  // so batches are reproducible and order-independent under parallel fill.
  SimBatch simulate_batch(const MatrixXd& thetas, const VectorXd& xi, std::uint64_t seed,
                          int threads = 1) const;
  void simulate_batch_pathwise(const MatrixXd& thetas, const VectorXd& xi, std::uint64_t seed,
                               MatrixXd& ys, MatrixXd& dys, int threads = 1) const;
};

// y_j = theta1 + theta2 xi_j + eps_j + nu_j, eps ~ N(0,1), nu ~ Gamma(shape, rate)
// in the shape/rate convention (Gamma(2,2): mean 1, variance 0.5).
// Priors: theta1, theta2 ~ N(0, 3^2) i.i.d. Design box [-bound, bound]^D.
class LinearModel : public Model {
 public:
  struct Options {
    double bound = 10.0;
    double gamma_shape = 2.0;
    double gamma_rate = 2.0;
    // Test hooks, unreachable from experiment configs: disable either noise
    // source. With gamma off the likelihood degenerates to the exact Gaussian.
    bool noise_eps = true;
    bool noise_gamma = true;
  };

  LinearModel() : opt_() {}
  explicit LinearModel(Options opt) : opt_(opt) {}

  std::string id() const override { return "linear"; }
  int theta_dim() const override { return 2; }
  DesignDomain domain(int measurements) const override;

  MatrixXd prior_sample(int n, std::uint64_t seed) const override;
  VectorXd simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const override;

  bool has_loglik() const override { return true; }
  double loglik(const VectorXd& y, const VectorXd& theta, const VectorXd& xi) const override;

  bool has_pathwise() const override { return true; }
  void simulate_pathwise(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed,
                         VectorXd& y, VectorXd& dy_dxi) const override;

  double prior_logpdf(const VectorXd& theta) const override;
  double prior_logpdf_natural(const VectorXd& u) const override { return prior_logpdf(u); }
  VectorXd natural_mean() const override { return VectorXd::Zero(2); }
  VectorXd natural_std() const override { return VectorXd::Constant(2, 3.0); }
  bool in_support(const VectorXd& theta) const override { return theta.size() == 2; }

  const Options& options() const { return opt_; }

 private:
  Options opt_;
};

// One-compartment pharmacokinetic response sampled once per patient:
// z(t) = (dose/V)(ka/(ka-ke))(e^{-ke t} - e^{-ka t})(1+eps1) + eps2,
// eps1 ~ N(0, 0.01), eps2 ~ N(0, 0.1); theta = (V, ka, ke), ka > ke.
// Prior: log(theta) ~ N((log 20, log 1, log 0.1), 0.05 I), rejecting ka <= ke.
class PkModel : public Model {
 public:
  struct Options {
    double dose = 400.0;
    double t_max = 24.0;
    bool noise = true;  // test hook
  };

  PkModel() : opt_() {}
  explicit PkModel(Options opt) : opt_(opt) {}

  std::string id() const override { return "pk"; }
  int theta_dim() const override { return 3; }
  DesignDomain domain(int measurements) const override;

  MatrixXd prior_sample(int n, std::uint64_t seed) const override;
  VectorXd simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const override;

  bool has_pathwise() const override { return true; }
  void simulate_pathwise(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed,
                         VectorXd& y, VectorXd& dy_dxi) const override;

  double prior_logpdf(const VectorXd& theta) const override;
  double prior_logpdf_natural(const VectorXd& u) const override;
  VectorXd theta_to_natural(const VectorXd& theta) const override;
  VectorXd natural_to_theta(const VectorXd& u) const override;
  VectorXd natural_mean() const override;
  VectorXd natural_std() const override;
  bool in_support(const VectorXd& theta) const override;

  // Mean response and its time-derivative at fixed noise draw eps1
  // (the additive noise drops out of the derivative).
  double mean_response(const VectorXd& theta, double t) const;
  double pathwise_grad(const VectorXd& theta, double t, double eps1) const;

  const Options& options() const { return opt_; }

 private:
  Options opt_;
};

// Two-level Rabi transition signal scaled to photon counts:
// y = A * (w1^2 / (w1^2 + d^2)) * sin^2(t/2 * sqrt(w1^2 + d^2)) + eta,
// d = detuning - center, eta ~ N(0,1). One (duration, detuning) pair per
// measurement, so the design vector interleaves [t_0, df_0, t_1, df_1, ...].
// Priors: rabi frequency ~ U(0.1, 10), center ~ U(-10, 10).
class RabiModel : public Model {
 public:
  struct Options {
    double amplitude = 100.0;
    bool noise = true;      // test hook
    bool grid_snap = false; // snap designs to the 101x101 evaluation grid
  };

  RabiModel() : opt_() {}
  explicit RabiModel(Options opt) : opt_(opt) {}

  std::string id() const override { return "quantum"; }
  int theta_dim() const override { return 2; }
  int design_len(int measurements) const override { return 2 * measurements; }
  DesignDomain domain(int measurements) const override;

  MatrixXd prior_sample(int n, std::uint64_t seed) const override;
  VectorXd simulate(const VectorXd& theta, const VectorXd& xi, std::uint64_t seed) const override;

  double prior_logpdf(const VectorXd& theta) const override;
  double prior_logpdf_natural(const VectorXd& u) const override { return prior_logpdf(u); }
  VectorXd natural_mean() const override;
  VectorXd natural_std() const override;
  bool in_support(const VectorXd& theta) const override;

  const Options& options() const { return opt_; }

 private:
  Options opt_;
};

std::unique_ptr<Model> make_model(const std::string& id);

}  // namespace gfbed::models

#endif  // GFBED_MODELS_HPP
