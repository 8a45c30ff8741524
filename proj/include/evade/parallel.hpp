#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace evade {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Static block partition of [begin, end). f(i) must only touch state owned by
// index i; aggregation stays deterministic because callers merge per-index
// slots in order afterwards. The first exception thrown by any worker is
// rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, unsigned n_threads, F&& f) {
  const std::size_t total = end > begin ? end - begin : 0;
  if (total == 0) return;
  n_threads = resolve_threads(n_threads);
  if (n_threads > total) n_threads = static_cast<unsigned>(total);
  if (n_threads <= 1) {
    for (std::size_t i = begin; i < end; ++i) f(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_block = [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> workers;
  workers.reserve(n_threads - 1);
  const std::size_t chunk = (total + n_threads - 1) / n_threads;
  std::size_t lo = begin;
  for (unsigned t = 0; t + 1 < n_threads && lo < end; ++t) {
    const std::size_t hi = std::min(end, lo + chunk);
    workers.emplace_back(run_block, lo, hi);
    lo = hi;
  }
  run_block(lo, end);
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace evade
