#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fwl {

// worker count from FREEWAYLAB_THREADS, default 1
inline int worker_count() {
  const char* s = std::getenv("FREEWAYLAB_THREADS");
  if (!s) return 1;
  const int n = std::atoi(s);
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  return std::clamp(n, 1, hw);
}

// runs body(i) for i in [0, n); results must be written to disjoint slots
inline void parallel_for(int n, const std::function<void(int)>& body) {
  const int nw = std::min(worker_count(), n);
  if (nw <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += nw) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace fwl
