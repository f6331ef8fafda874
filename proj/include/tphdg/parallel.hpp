// Element-parallel loops over OpenMP with a serial fallback.
#pragma once

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tphdg {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs f(i) for i in [0, n). Each index is processed by exactly one thread,
/// so results written per index do not depend on the schedule. The exception
/// of the lowest failing index is rethrown.
template <class F>
void parallel_for(int n, bool parallel, F&& f) {
  std::exception_ptr error;
  int error_index = n;
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
#pragma omp critical(tphdg_parallel_for)
      {
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tphdg
