#include "recip/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace recip {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RECIP_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_blocks(std::int64_t count, std::int64_t block_size, int workers,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::size_t)>& fn) {
  if (count <= 0) return;
  if (block_size <= 0) block_size = 1;
  const std::size_t nblocks =
      static_cast<std::size_t>((count + block_size - 1) / block_size);

  auto run_block = [&](std::size_t bi) {
    const std::int64_t begin = static_cast<std::int64_t>(bi) * block_size;
    const std::int64_t end = std::min(count, begin + block_size);
    fn(begin, end, bi);
  };

  workers = resolve_workers(workers);
  if (workers <= 1 || nblocks <= 1) {
    for (std::size_t bi = 0; bi < nblocks; ++bi) run_block(bi);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t bi = next.fetch_add(1);
      if (bi >= nblocks) return;
      try {
        run_block(bi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const int nthreads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), nblocks));
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace recip
