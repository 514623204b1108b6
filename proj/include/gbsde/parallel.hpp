#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gbsde {

/// Execution policy for the path-parallel kernels. Every kernel has the same
/// observable behaviour under both policies: work items write disjoint output
/// slots and all cross-path reductions run in a fixed order, so serial and
/// parallel runs agree bit for bit. The serial policy is kept as the
/// reference implementation for tests and benchmarks.
enum class Exec { serial, parallel };

/// Runs body(i, ws) for i in [0, n), giving each worker its own scratch
/// workspace built by make_ws().
template <class MakeWs, class Body>
void for_each_indexed(Exec exec, std::size_t n, MakeWs&& make_ws, Body&& body) {
#ifdef _OPENMP
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      auto ws = make_ws();
#pragma omp for schedule(static)
      for (long long i = 0; i < static_cast<long long>(n); ++i)
        body(static_cast<std::size_t>(i), ws);
    }
    return;
  }
#else
  (void)exec;
#endif
  auto ws = make_ws();
  for (std::size_t i = 0; i < n; ++i) body(i, ws);
}

struct NoWorkspace {};

template <class Body>
void for_each_path(Exec exec, std::size_t n, Body&& body) {
  for_each_indexed(
      exec, n, [] { return NoWorkspace{}; },
      [&](std::size_t i, NoWorkspace&) { body(i); });
}

/// Captures the first exception thrown inside a parallel region so it can be
/// rethrown on the calling thread. OpenMP regions must not leak exceptions.
class FirstError {
 public:
  template <class F>
  void run(F&& f) noexcept {
    if (failed_) return;
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) {
        error_ = std::current_exception();
        failed_ = true;
      }
    }
  }

  bool failed() const { return failed_; }

  void rethrow_if_failed() {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
  volatile bool failed_ = false;
};

}  // namespace gbsde
