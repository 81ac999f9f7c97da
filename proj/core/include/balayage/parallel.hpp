#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace balayage {

/// Worker count: BALAYAGE_THREADS when set to a positive integer, else hardware parallelism.
int worker_count();

/// Runs body(i) for i in [begin, end) with indices dealt round-robin to workers.
/// Each index is processed by exactly one worker, so bodies that write disjoint
/// outputs give results independent of the worker count.
template <typename Body>
void parallel_for(long begin, long end, Body&& body) {
  const long n = end - begin;
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<long>(worker_count(), n));
  if (workers <= 1) {
    for (long i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (long i = begin + w; i < end; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace balayage
