#pragma once

namespace slc {

// Process-wide allocator settings for training workloads. Every SGD step
// allocates and frees multi-megabyte activation and gradient buffers; with
// glibc's defaults these are served by mmap and returned to the kernel each
// step, so most of the run is spent in page faults. Raising the mmap and
// trim thresholds keeps them on the heap. A no-op on other C libraries.
void configure_allocator();

}  // namespace slc
