#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tracelab::parallel {

/// Sets the OpenMP worker count; values < 1 restore the runtime default.
void set_threads(int n);
int threads();

inline constexpr std::size_t kBlock = 2048;

/// Sum of f(i) for i in [0, n). Partial sums are taken over fixed index
/// blocks and combined serially, so the result does not depend on the
/// number of threads.
template <class F>
double block_sum(std::size_t n, F&& f) {
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

/// Runs f(i) for i in [0, n) with dynamic scheduling; f must only write to
/// slots owned by i.
template <class F>
void for_each_index(std::size_t n, F&& f) {
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    f(static_cast<std::size_t>(i));
  }
}

}  // namespace tracelab::parallel
