#include "lder/kernels.hpp"

#include <atomic>

namespace lder::kernels {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::OpenMp
#else
    Backend::Serial
#endif
};

}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace lder::kernels
