#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace seed {

// Worker count: hardware concurrency capped by SEED_HEAD_THREADS when set.
inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("SEED_HEAD_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1 && c < n) n = c;
  }
  return n;
}

// Parallel loop over [0, count). Each index writes only its own outputs, so
// results are bit-identical to the sequential loop for any thread count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const int workers = worker_count();
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(workers, count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += nthreads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace seed
