#ifndef AVIEB_CORE_HPP
#define AVIEB_CORE_HPP

#include <Eigen/Dense>

#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace avieb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Numerical tolerances shared by every module.
///
/// `feas` governs constraint satisfaction inside the kernel, `opt` governs
/// optimality/duality gaps and `cmp` is used for all cross-module comparisons
/// (membership, equality of computed values, dedup of vertices).
struct Tolerances {
  double feas = 1e-9;
  double opt = 1e-7;
  double cmp = 1e-6;
};

// Error hierarchy. Every failure surfaced by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};
class EmptySet : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class CapExceeded : public Error {
 public:
  using Error::Error;
};
class DegenerateSampler : public Error {
 public:
  using Error::Error;
};
class NoSolution : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Exact equality that tolerates differing shapes.
template <class A, class B>
bool same_matrix(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

inline void require_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Results must be written by index so that the outcome does not
/// depend on scheduling. The first exception thrown by any task is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::jthread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace avieb

#endif  // AVIEB_CORE_HPP
