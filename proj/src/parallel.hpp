#pragma once

// Index-parallel loop. Thread count comes from GEOBLOCK_THREADS (default 1).
// Each index writes only its own output slot, so results do not depend on
// scheduling.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geoblock::detail {

inline unsigned thread_count() {
  const char* env = std::getenv("GEOBLOCK_THREADS");
  if (env == nullptr) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v <= 0) return std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min(v, 256L));
}

}  // namespace geoblock::detail

namespace geoblock {

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned threads = std::min<std::size_t>(detail::thread_count(), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace geoblock
