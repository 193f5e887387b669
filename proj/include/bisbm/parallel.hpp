#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bisbm {

// Runs f(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker. Each item must be independent of the others; results identical for
// any thread count.
template <typename F>
void parallel_for(std::size_t n, int num_threads, F&& f) {
  if (n == 0) return;
  const std::size_t nt = std::min<std::size_t>(std::max(num_threads, 1), n);
  if (nt == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(nt);
  workers.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    workers.emplace_back([&, lo, hi, t] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace bisbm
