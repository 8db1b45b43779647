#include "spr/threading.hpp"

#include <algorithm>
#include <mutex>
#include <thread>
#include <vector>

namespace spr {

namespace {
int g_max_threads = []() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}();
}  // namespace

int max_threads() { return g_max_threads; }

void set_max_threads(int n) { g_max_threads = std::max(1, n); }

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(g_max_threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  // Contiguous blocks keep each worker's writes local.
  const int base = n / workers;
  const int extra = n % workers;
  int begin = 0;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    const int count = base + (w < extra ? 1 : 0);
    const int lo = begin;
    const int hi = begin + count;
    begin = hi;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace spr
