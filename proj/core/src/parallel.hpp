#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace teleopt::detail {

// Runs fn(0..n-1) across a small thread pool. Job outputs go into
// caller-preallocated slots, so scheduling never affects results. The first
// escaping exception is rethrown after all workers join.
template <class F>
void parallel_for(int n, F&& fn) {
  if (n <= 0) return;
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = static_cast<int>(std::max(1u, std::min<unsigned>(hw ? hw : 1, n)));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace teleopt::detail
