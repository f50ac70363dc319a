#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace facefake::nn {

/// Global compute-thread count for batched layer math. Per-sample work is
/// partitioned statically and any cross-sample reduction happens in sample
/// order, so results are bit-identical for every thread count.
int num_threads();
void set_num_threads(int n);

template <typename F>
void parallel_for(int count, F&& fn) {
  const int threads = std::min(num_threads(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn]() {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace facefake::nn
