#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace proxblock {

/// Worker cap, read once from PROXBLOCK_THREADS. Unset, empty, or
/// unparsable values mean serial execution.
inline int thread_budget() {
  static const int budget = [] {
    const char* env = std::getenv("PROXBLOCK_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) return 1;
    return static_cast<int>(std::min<long>(v, 256));
  }();
  return budget;
}

/// Run fn(0..n-1), possibly on several threads. Results are bitwise
/// independent of the thread count: every index writes to its own slots
/// and nothing else, so callers must not share mutable state across
/// indices. Reductions belong after the loop, in index order.
template <typename Fn>
inline void parallel_for(int n, Fn&& fn) {
  int workers = std::min(thread_budget(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace proxblock
