#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace sglgg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream id from a base seed and up to two cell
/// indices, so parallel and serial execution draw identical randomness.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(mix_seed(seed, a, b));
}

/// Runs task(0..n_tasks-1), using up to `threads` workers. Tasks must be
/// independent; results should be written to preallocated slots indexed by
/// task id so that aggregation order does not depend on scheduling.
inline void parallel_for(int n_tasks, int threads, const std::function<void(int)>& task) {
  if (n_tasks <= 0) return;
  if (threads < 1) threads = 1;
  if (threads == 1 || n_tasks == 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  const int n_workers = std::min(threads, n_tasks);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n_tasks) break;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sglgg
