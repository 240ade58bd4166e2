#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pcs {

/// Run fn(chunk_index, begin, end) over [0, count) split into fixed-size chunks.
/// Chunk boundaries depend only on (count, chunk_size), never on the thread
/// count, so per-chunk results can be reduced in index order for totals that
/// are bitwise independent of the parallelism.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t chunk_size, int threads, Fn&& fn) {
  if (count == 0) return;
  chunk_size = std::max<std::size_t>(1, chunk_size);
  const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    try {
      for (std::size_t c; (c = next.fetch_add(1)) < n_chunks;) {
        fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(n_chunks);  // stop handing out work
    }
  };

  if (threads <= 1 || n_chunks == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n_workers = std::min<std::size_t>(threads, n_chunks);
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace pcs
