#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace zfpbias {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Run fn(i) for i in [0, n) on up to `threads` workers. Exceptions are rethrown.
template <class F>
void parallel_for(std::uint64_t n, int threads, F&& fn) {
  int t = std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(n, 1));
  if (t <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::uint64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int k = 0; k < t; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Chunked reduction whose result does not depend on the worker count:
// chunk c covers items [c*chunk, min(n, (c+1)*chunk)), is processed by
// work(c, begin, end) -> Acc, and partial results are merged in chunk order.
template <class Acc, class Work, class Merge>
Acc chunked_reduce(std::uint64_t n, std::uint64_t chunk, int threads, Acc init, Work&& work, Merge&& merge) {
  if (chunk == 0) chunk = 1;
  std::uint64_t nchunks = (n + chunk - 1) / chunk;
  std::vector<Acc> parts(nchunks, init);
  parallel_for(nchunks, threads, [&](std::uint64_t c) {
    std::uint64_t b = c * chunk, e = std::min(n, b + chunk);
    parts[c] = work(c, b, e);
  });
  Acc out = init;
  for (auto& p : parts) merge(out, p);
  return out;
}

}  // namespace zfpbias
