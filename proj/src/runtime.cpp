#include "slc/runtime.hpp"

#include <cstdlib>  // defines __GLIBC__ on glibc

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace slc {

void configure_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);  // glibc rejects values above 32 MiB
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace slc
