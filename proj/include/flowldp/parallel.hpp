#pragma once

#include <cstddef>
#include <functional>

namespace flowldp {

// Worker count: FLOWLDP_THREADS if set and positive, else hardware concurrency.
std::size_t default_workers();

// Splits [0, count) into fixed blocks of `block` items and runs
// fn(begin, end, block_index) for each block on `workers` threads.
// Block boundaries depend only on (count, block), never on the worker count,
// so per-block partial results can be reduced in block order deterministically.
// The first exception thrown by any block is rethrown on the calling thread.
void parallel_blocks(std::size_t count, std::size_t block, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t block_count(std::size_t count, std::size_t block) {
  return block == 0 ? 0 : (count + block - 1) / block;
}

}  // namespace flowldp
