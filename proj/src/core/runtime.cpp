#include "choreo/core/runtime.hpp"

#include <cstdlib>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "choreo/nn/kernels.hpp"

namespace choreo {

void configure_runtime(int threads) {
  if (threads > 0) kernels::set_thread_count(threads);
#if defined(__GLIBC__)
  // Activations of the raw-audio blocks run to tens of MB; with the default
  // mmap threshold each one is a fresh mapping and page-faults on first touch.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace choreo
