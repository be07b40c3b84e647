#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bovir {

/// Resolves a user-facing thread count; 0 means "all hardware threads".
inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs body(begin, end) over [0, n) split into contiguous blocks, one per
/// worker. The partition depends on the thread count, so bodies must only
/// write to per-index outputs; reductions go through fixed_chunk_reduce.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    if (n > 0) body(std::size_t{0}, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t block = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * block;
      const std::size_t end = std::min(n, begin + block);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Deterministic parallel sum: [0, n) is cut into chunks of a fixed size
/// (independent of the thread count), each chunk is summed sequentially and
/// the partials are added in chunk order.
template <typename ChunkSum>
double fixed_chunk_reduce(std::size_t n, unsigned threads, ChunkSum&& chunk_sum,
                          std::size_t chunk = 4096) {
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c)
      partial[c] = chunk_sum(c * chunk, std::min(n, (c + 1) * chunk));
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace bovir
