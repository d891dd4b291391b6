#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace npr {

/// Number of workers used when a caller passes threads <= 0.
inline int default_thread_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(i) for i in [0, n) on the given number of threads.
/// Work is handed out in chunks through an atomic counter, so the
/// assignment of indices to threads is nondeterministic; callers must
/// only use this where per-index work is independent.
template <typename Fn>
void parallel_for(std::int64_t n, const Fn& fn, int threads = 0, std::int64_t chunk = 1) {
  if (n <= 0) return;
  if (threads <= 0) threads = default_thread_count();
  if (threads == 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (chunk < 1) chunk = 1;
  std::atomic<std::int64_t> next(0);
  auto worker = [&] {
    for (;;) {
      const std::int64_t begin = next.fetch_add(chunk);
      if (begin >= n) break;
      const std::int64_t end = std::min(begin + chunk, n);
      for (std::int64_t i = begin; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace npr
