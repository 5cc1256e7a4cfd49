#pragma once

namespace choreo {

/// Process-wide setup for long training runs: caps the OpenMP thread count
/// (0 keeps the default) and, on glibc, stops the allocator from returning
/// large activation buffers to the OS after every step.
void configure_runtime(int threads = 0);

}  // namespace choreo
