#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kimura {

/// Process-wide default worker count; 0 means hardware concurrency.
inline unsigned& default_workers() {
  static unsigned workers = 0;
  return workers;
}

inline unsigned resolve_workers(unsigned requested) {
  unsigned w = requested ? requested : default_workers();
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

/// Runs body(i) for i in [0, n) over disjoint contiguous blocks. Each index is
/// visited exactly once, so results written to slot i are independent of the
/// worker count. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned workers = 0) {
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(w);
  const std::size_t chunk = (n + w - 1) / w;
  for (unsigned k = 0; k < w; ++k) {
    const std::size_t lo = k * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kimura
