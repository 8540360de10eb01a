#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace diffreg {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is handed out
/// in contiguous chunks; callers must only write to per-index outputs so the
/// result does not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn, int chunk = 16) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, std::max(1, (n + chunk - 1) / chunk));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const int begin = next.fetch_add(chunk);
        if (begin >= n) break;
        const int end = std::min(n, begin + chunk);
        for (int i = begin; i < end; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(n);
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace diffreg
