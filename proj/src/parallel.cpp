#include "borel_riccati/parallel.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace br {

int thread_cap() {
    static const int cap = [] {
        if (const char* env = std::getenv("BOREL_RICCATI_THREADS")) {
            int n = std::atoi(env);
            if (n > 0) return n;
        }
#ifdef _OPENMP
        return omp_get_max_threads();
#else
        return 1;
#endif
    }();
    return cap;
}

} // namespace br
