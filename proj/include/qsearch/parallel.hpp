#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qsearch {

/// 0 means one worker per hardware thread.
inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Splits [0, n) into contiguous chunks and calls fn(begin, end) for each on its
 * own thread. fn must write results into per-index slots; the caller reduces in
 * index order, so results do not depend on the worker count.
 */
template <class Fn>
void parallel_for(std::int64_t n, unsigned workers, Fn&& fn) {
  if (n <= 0) return;
  const auto w = static_cast<std::int64_t>(std::min<std::int64_t>(resolve_workers(workers), n));
  if (w == 1) {
    fn(std::int64_t{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(w));
    for (std::int64_t k = 0; k < w; ++k) {
      const std::int64_t begin = n * k / w;
      const std::int64_t end = n * (k + 1) / w;
      threads.emplace_back([&, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace qsearch
