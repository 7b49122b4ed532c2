#include "disparity/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace disparity {

int max_threads() {
  static const int cached = [] {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("DISPARITY_ID_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v >= 1) n = static_cast<int>(v);
    }
    return n;
  }();
  return cached;
}

namespace {
// True on threads spawned by parallel_for; nested loops run serially on the
// worker instead of multiplying the thread count.
thread_local bool inside_parallel_worker = false;
}  // namespace

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = inside_parallel_worker ? 1 : std::min(max_threads(), n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long>(n) * (w + 1) / workers);
    threads.emplace_back([&, begin, end] {
      inside_parallel_worker = true;
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace disparity
