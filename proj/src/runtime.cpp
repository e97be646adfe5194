#include "kstrip/runtime.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>

#include "kstrip/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace kstrip {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

std::size_t thread_limit() {
  const char* env = std::getenv("KSTRIP_THREADS");
  std::size_t n = 0;
  if (env != nullptr && *env != '\0') {
    const char* end = env + std::strlen(env);
    const auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError("KSTRIP_THREADS must be a non-negative integer, got '" + std::string(env) + "'");
    }
  }
  if (n == 0) n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace kstrip
