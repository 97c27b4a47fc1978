#ifndef LDER_KERNELS_HPP
#define LDER_KERNELS_HPP

/// Data-parallel primitives shared by the hot loops (batch prediction, loss
/// and gradient reductions, sparse mat-vecs inside the QP solver).
///
/// Reductions use a fixed chunk width: partial sums are formed sequentially
/// inside each chunk and combined in chunk order, so the summation tree —
/// and therefore every bit of the result — is independent of the backend and
/// of the number of OpenMP threads. Elementwise loops write disjoint outputs
/// and are trivially reproducible.

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lder::kernels {

enum class Backend { Serial, OpenMp };

// Process-wide backend switch. Defaults to OpenMp when compiled with OpenMP.
Backend backend();
void set_backend(Backend b);
int max_threads();

// Chunk width for deterministic reductions. Fixed at build time.
inline constexpr std::ptrdiff_t kReductionChunk = 256;

// Parallel loop over independent indices. `grain` is the minimum work per
// thread before going parallel; below it the loop stays serial.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& f, std::ptrdiff_t grain = 256) {
#ifdef _OPENMP
  if (backend() == Backend::OpenMp && n >= 2 * grain && max_threads() > 1) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
    return;
  }
#else
  (void)grain;
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
}

// Deterministic sum of f(i) over [0,n).
template <class F>
double chunked_sum(std::ptrdiff_t n, F&& f) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t nchunks = (n + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
  parallel_for(
      nchunks,
      [&](std::ptrdiff_t c) {
        const std::ptrdiff_t lo = c * kReductionChunk;
        const std::ptrdiff_t hi = std::min(n, lo + kReductionChunk);
        double s = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) s += f(i);
        partial[static_cast<std::size_t>(c)] = s;
      },
      1);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// Deterministic accumulation of per-index contributions into a dense buffer:
// f(i, acc) must add sample i's contribution into acc[0..dim). out is zeroed
// first; chunk partials are combined in chunk order.
template <class F>
void chunked_accumulate(std::ptrdiff_t n, std::ptrdiff_t dim, double* out, F&& f) {
  for (std::ptrdiff_t j = 0; j < dim; ++j) out[j] = 0.0;
  if (n <= 0) return;
  const std::ptrdiff_t nchunks = (n + kReductionChunk - 1) / kReductionChunk;
  if (nchunks == 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i, out);
    return;
  }
  std::vector<double> scratch(static_cast<std::size_t>(nchunks * dim), 0.0);
  parallel_for(
      nchunks,
      [&](std::ptrdiff_t c) {
        double* acc = scratch.data() + c * dim;
        const std::ptrdiff_t lo = c * kReductionChunk;
        const std::ptrdiff_t hi = std::min(n, lo + kReductionChunk);
        for (std::ptrdiff_t i = lo; i < hi; ++i) f(i, acc);
      },
      1);
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const double* acc = scratch.data() + c * dim;
    for (std::ptrdiff_t j = 0; j < dim; ++j) out[j] += acc[j];
  }
}

}  // namespace lder::kernels

#endif  // LDER_KERNELS_HPP
