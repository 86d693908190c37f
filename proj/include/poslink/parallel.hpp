#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

namespace poslink {

// Worker cap taken from POSLINK_THREADS; defaults to the hardware concurrency.
// Every parallel loop in the library writes results by index, so the value
// only affects speed.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("POSLINK_THREADS")) {
    std::string_view text(env);
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec == std::errc() && ptr == text.data() + text.size() && n > 0) return n;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Calls fn(i) for i in [0, n). The first exception thrown by any call is
// rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t workers = worker_count()) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace poslink
