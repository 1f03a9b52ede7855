#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sced {

inline int thread_count(int requested) {
  if (const char* env = std::getenv("SCED_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// runs fn(i) for i in [0, count) on up to n_threads workers
inline void parallel_for(int count, int n_threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  n_threads = std::min(n_threads, count);
  if (n_threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed) std::rethrow_exception(err);
}

}  // namespace sced
