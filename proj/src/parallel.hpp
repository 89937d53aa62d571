#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace pixfuse {

// Splits [0, rowCount) into contiguous chunks, one worker thread per chunk.
// fn(rowBegin, rowEnd) must be safe to run concurrently on disjoint ranges.
template <typename Fn>
void parallelForRows(int rowCount, int threads, Fn&& fn) {
  if (threads <= 1 || rowCount <= 1) {
    fn(0, rowCount);
    return;
  }
  int workers = std::min(threads, rowCount);
  int chunk = (rowCount + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    int begin = w * chunk;
    int end = std::min(rowCount, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

} // namespace pixfuse
