#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace btf {

/// 0 means one worker per hardware thread.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(worker) for worker in [0, workers). Worker 0 runs on the calling
/// thread. The first exception by worker index is rethrown after joining.
template <typename Fn>
void run_workers(int workers, Fn&& fn) {
  if (workers <= 1) {
    fn(0);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers - 1));
  for (int w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        fn(w);
      } catch (...) {
        errors[std::size_t(w)] = std::current_exception();
      }
    });
  }
  try {
    fn(0);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Splits [0, n) into contiguous ranges, one per worker.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  workers = int(std::min<std::size_t>(std::size_t(std::max(workers, 1)), std::max<std::size_t>(n, 1)));
  run_workers(workers, [&](int w) {
    const std::size_t begin = n * std::size_t(w) / std::size_t(workers);
    const std::size_t end = n * std::size_t(w + 1) / std::size_t(workers);
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace btf
