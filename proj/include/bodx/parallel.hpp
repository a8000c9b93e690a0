#ifndef BODX_PARALLEL_HPP
#define BODX_PARALLEL_HPP

#include <cstddef>

// Execution policy for the data-parallel kernels (quadrature-node sweeps,
// multistart search, Monte Carlo probes). Every kernel writes per-index
// results into a caller-owned buffer and reduces serially in index order, so
// the parallel path is bit-identical to the serial reference; tests assert
// that and bodx_bench times the two paths against each other.
namespace bodx::par {

// Thread budget: BODX_THREADS env var if set (clamped to >= 1), else the
// OpenMP default. Without OpenMP both return 1 and loops run serially.
int max_threads();

// Force the serial reference path on/off at runtime (used by tests and the
// benchmark; independent of the thread budget).
void set_serial(bool serial);
bool serial_forced();

namespace detail {
bool use_parallel(std::size_t n);
}

// Parallel-for over [0, n). `f` must be safe to run concurrently for distinct
// indices; results must go into per-index slots, not a shared accumulator.
template <class F>
void for_index(std::size_t n, F&& f) {
  if (!detail::use_parallel(n)) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    f(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

}  // namespace bodx::par

#endif
