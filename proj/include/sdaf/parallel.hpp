#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdaf {

// Grain size for deterministic chunked reductions. Partial sums are formed
// per fixed-size chunk and combined serially in chunk order, so the result
// does not depend on the number of threads.
inline constexpr std::ptrdiff_t kReduceChunk = 1024;

template <typename Body>
void parallel_for(std::ptrdiff_t count, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    body(i);
  }
}

// Deterministic sum of body(i) over [0, count).
template <typename Body>
double parallel_sum(std::ptrdiff_t count, Body&& body) {
  const std::ptrdiff_t nchunks = (count + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks > 0 ? nchunks : 1), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const std::ptrdiff_t lo = c * kReduceChunk;
    const std::ptrdiff_t hi = lo + kReduceChunk < count ? lo + kReduceChunk : count;
    double s = 0.0;
    for (std::ptrdiff_t i = lo; i < hi; ++i) s += body(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) total += partial[static_cast<std::size_t>(c)];
  return total;
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sdaf
