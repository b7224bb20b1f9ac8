#include "graphflow/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace graphflow {

int worker_count() {
  static int cached = [] {
    if (const char* env = std::getenv("GRAPHFLOW_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return std::min(v, 64);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 64u));
  }();
  return cached;
}

void parallel_chunks(int n, const std::function<void(int, int, int)>& fn) {
  const int workers = std::min(worker_count(), std::max(n, 1));
  if (workers <= 1 || n <= 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  std::vector<std::exception_ptr> errors(workers);
  auto guarded = [&](int c, int begin, int end) {
    try {
      fn(c, begin, end);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const int base = n / workers, rem = n % workers;
  int begin = 0;
  for (int c = 0; c < workers; ++c) {
    const int len = base + (c < rem ? 1 : 0);
    const int end = begin + len;
    if (c + 1 == workers) {
      guarded(c, begin, end);
    } else {
      pool.emplace_back(guarded, c, begin, end);
    }
    begin = end;
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace graphflow
