#ifndef GFBED_RNG_HPP
#define GFBED_RNG_HPP

#include <cstdint>
#include <random>

namespace gfbed {

// splitmix64 finalizer. Used both as a cheap counter-based engine and to
// derive independent seed streams from a master seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seed for a named substream: stream tags a component (prior draw, noise,
// pairing, ...), index tags the epoch / row within it.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
  return mix64(base ^ mix64(stream ^ mix64(index)));
}

// One-word random engine; construction is a single store, so per-row
// engines in simulator batches cost nothing.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

// Fresh distribution objects per call: no hidden state carries over, so a
// draw depends only on the engine position.
inline double draw_normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  std::normal_distribution<double> d(mean, stddev);
  return d(rng);
}

inline double draw_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// Gamma in shape/rate parameterization (mean = shape/rate).
inline double draw_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(rng);
}

inline std::uint64_t draw_index(Rng& rng, std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
  return d(rng);
}

}  // namespace gfbed

#endif  // GFBED_RNG_HPP
