#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace interpole {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must only write
/// to its own index's output slot; callers reduce results in index order so
/// that totals are independent of scheduling. The lowest-index exception, if
/// any, is rethrown.
template <typename F>
void parallel_for(int n, int workers, F&& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int k = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (int w = 0; w < k; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  for (int i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
}

}  // namespace interpole
