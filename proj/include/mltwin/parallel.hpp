#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mltwin {

/// Runs fn(0..count-1) on up to `jobs` threads. Rethrows the first exception.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const auto width = std::min<std::size_t>(jobs, count);
  threads.reserve(width);
  for (std::size_t t = 0; t < width; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mltwin
