#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace farsim {

// Parallelism is a hint only: every parallel loop in the project produces
// bit-identical results for any thread count.
inline void set_jobs(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline int max_jobs() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace farsim
