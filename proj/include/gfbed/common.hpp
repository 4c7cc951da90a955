#ifndef GFBED_COMMON_HPP
#define GFBED_COMMON_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace gfbed {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Raised for malformed or inconsistent experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an operation is asked of a model that cannot support it,
// e.g. a nested-MC reference on a model without a tractable likelihood
// (CLI exit code 4).
struct UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a numeric result leaves the finite range mid-computation.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs fn(i) for i in [0, count). Work items must be independent; results
// must be written to disjoint slots so the outcome does not depend on
// scheduling. threads <= 1 runs inline.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  int workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace gfbed

#endif  // GFBED_COMMON_HPP
