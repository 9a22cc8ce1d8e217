#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "lowrank/types.hpp"

namespace lowrank {

/// Runs fn(i) for i in [0, n) on up to `threads` workers over contiguous
/// chunks. Tasks must write disjoint outputs; there is no aggregation, so the
/// result is identical for any thread count. The first exception thrown by a
/// task is rethrown on the calling thread.
template <class Fn>
void parallelFor(Index n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  const Index workers = std::min<Index>(threads, n);
  const Index chunk = (n + workers - 1) / workers;
  std::exception_ptr error;
  std::atomic_flag errorSet = ATOMIC_FLAG_INIT;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn, &error, &errorSet] {
      try {
        for (Index i = begin; i < end; ++i) fn(i);
      } catch (...) {
        if (!errorSet.test_and_set()) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lowrank
