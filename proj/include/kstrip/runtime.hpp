#pragma once

#include <cstddef>

namespace kstrip {

// Keeps large activation buffers on the heap instead of fresh mmap pages,
// which otherwise get faulted in again on every training step. No-op
// outside glibc.
void tune_allocator();

// Worker count from KSTRIP_THREADS; unset or 0 means hardware concurrency.
// Throws ConfigError on a malformed value.
std::size_t thread_limit();

}  // namespace kstrip
