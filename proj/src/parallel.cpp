#include "strongsig/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace strongsig {

int max_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("STRONGSIG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace strongsig
