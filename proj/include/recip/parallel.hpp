#pragma once

#include <cstdint>
#include <functional>

namespace recip {

// Worker count: explicit value if > 0, else RECIP_WORKERS, else the hardware.
int resolve_workers(int requested);

// Applies fn(begin, end, block_index) to fixed-size blocks of [0, count).
// The block decomposition depends only on (count, block_size), never on the
// worker count, so callers that write per-block results into slot
// `block_index` and combine them in index order get identical output for any
// number of workers.
void parallel_blocks(std::int64_t count, std::int64_t block_size, int workers,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::size_t)>& fn);

}  // namespace recip
