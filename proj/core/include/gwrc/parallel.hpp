#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gwrc {

// Static block partition of [0, n) across `workers` threads. Work items write
// only to their own index slots, so results are identical for any worker
// count; exceptions from workers are rethrown on the calling thread.
inline void parallel_for_index(std::uint64_t n, std::uint32_t workers,
                               const std::function<void(std::uint64_t)>& fn) {
  if (workers <= 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::uint32_t w = static_cast<std::uint32_t>(std::min<std::uint64_t>(workers, n));
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::uint32_t t = 0; t < w; ++t) {
    const std::uint64_t lo = n * t / w;
    const std::uint64_t hi = n * (t + 1) / w;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gwrc
