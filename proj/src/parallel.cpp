#include "bodx/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bodx::par {

namespace {
std::atomic<bool> g_serial{false};

int env_threads() {
  const char* s = std::getenv("BODX_THREADS");
  if (!s || !*s) return 0;
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end == s || v < 1) return 1;
  return static_cast<int>(v);
}
}  // namespace

int max_threads() {
#ifdef _OPENMP
  int budget = env_threads();
  if (budget > 0) omp_set_num_threads(budget);
  return budget > 0 ? budget : omp_get_max_threads();
#else
  return 1;
#endif
}

void set_serial(bool serial) { g_serial.store(serial); }
bool serial_forced() { return g_serial.load(); }

namespace detail {
bool use_parallel(std::size_t n) {
#ifdef _OPENMP
  if (g_serial.load()) return false;
  if (omp_in_parallel()) return false;  // no nested teams
  return n >= 2 && max_threads() > 1;
#else
  (void)n;
  return false;
#endif
}
}  // namespace detail

}  // namespace bodx::par
