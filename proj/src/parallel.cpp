#include "tracelab/parallel.hpp"

namespace tracelab::parallel {

void set_threads(int n) {
#ifdef _OPENMP
  static const int initial = omp_get_max_threads();
  omp_set_num_threads(n >= 1 ? n : initial);
#else
  (void)n;
#endif
}

int threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tracelab::parallel
