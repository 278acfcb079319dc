#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace predcal::detail {

// Runs fn(begin, end) over contiguous chunks of [0, n) on up to `threads`
// workers.  Chunk boundaries depend only on (n, threads); outputs written
// per index are identical to a serial run.  The first exception thrown by
// any worker is rethrown on the calling thread.
inline void parallel_chunks(
    std::int64_t n, int threads,
    const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  std::int64_t workers = threads <= 1 ? 1 : threads;
  if (workers > n) workers = n;
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::int64_t base = n / workers;
  const std::int64_t extra = n % workers;
  std::int64_t begin = 0;
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t len = base + (w < extra ? 1 : 0);
    const std::int64_t end = begin + len;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    begin = end;
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace predcal::detail
