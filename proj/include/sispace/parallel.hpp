#pragma once

#include <atomic>
#include <thread>
#include <utility>
#include <vector>

namespace sispace {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

inline int default_thread_count() { return detail::thread_count_slot().load(); }

inline void set_default_thread_count(int n) {
  detail::thread_count_slot().store(n < 1 ? 1 : n);
}

// Runs fn(i) for i in [0, count). Work is split into contiguous index blocks,
// one per thread, so every i is visited by exactly one thread and any
// per-index output slot is written exactly once. Reductions must not be done
// through shared accumulators here; callers store per-index results and
// reduce sequentially afterwards, which keeps results independent of the
// thread count.
template <class F>
void parallel_for(int count, F&& fn) {
  int threads = default_thread_count();
  if (threads > count) threads = count;
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int base = count / threads;
  const int extra = count % threads;
  std::vector<std::thread> pool;
  pool.reserve(size_t(threads));
  int lo = 0;
  for (int t = 0; t < threads; ++t) {
    const int len = base + (t < extra ? 1 : 0);
    const int hi = lo + len;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
    lo = hi;
  }
  for (auto& th : pool) th.join();
}

}  // namespace sispace
