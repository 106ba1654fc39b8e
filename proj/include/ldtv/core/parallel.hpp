#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ldtv {

/// Process-wide worker count for Monte Carlo loops (0 means hardware
/// concurrency). Results never depend on this value.
int default_threads();
void set_default_threads(int threads);

/// Samples per work unit. Fixed so that the reduction tree, and hence every
/// floating-point result, is independent of the thread count.
inline constexpr std::uint64_t kChunkSize = 2048;

/// Runs fn(begin, end) over [0, count) in fixed-size chunks and returns the
/// per-chunk results in chunk order.
template <class Partial, class Fn>
std::vector<Partial> map_chunks(std::uint64_t count, Fn&& fn,
                                std::uint64_t chunk = kChunkSize,
                                int threads = 0) {
  const std::uint64_t chunks = (count + chunk - 1) / chunk;
  std::vector<Partial> out(chunks);
  if (chunks == 0) return out;
  int workers = threads > 0 ? threads : default_threads();
  workers = static_cast<int>(std::min<std::uint64_t>(workers, chunks));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::uint64_t begin = c * chunk;
      const std::uint64_t end = std::min(count, begin + chunk);
      try {
        out[c] = fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Pairwise (fixed-tree) reduction of chunk partials with merge(a, b) -> a.
template <class Partial, class Merge>
Partial reduce_pairwise(std::vector<Partial> parts, Merge&& merge) {
  if (parts.empty()) return Partial{};
  while (parts.size() > 1) {
    std::vector<Partial> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      next.push_back(merge(std::move(parts[i]), std::move(parts[i + 1])));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

}  // namespace ldtv
