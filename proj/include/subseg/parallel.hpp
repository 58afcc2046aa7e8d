#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace subseg {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written by index so output order never depends on the thread count.
// The first exception thrown by any worker is rethrown on the caller.
template <class Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned workers = threads;
  if (static_cast<size_t>(workers) > n) workers = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        // Static block partition: worker w owns [lo, hi).
        size_t lo = n * w / workers;
        size_t hi = n * (w + 1) / workers;
        for (size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace subseg
