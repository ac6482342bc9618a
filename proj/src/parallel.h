#pragma once

#include <cstddef>
#include <functional>

namespace rkhspi::internal {

/// Worker count from RKHSPI_NUM_THREADS (default 1, clamped to [1, 256]).
int NumThreads();

/// Calls body(begin, end) on disjoint contiguous chunks covering [0, n).
/// Chunk boundaries depend only on n and the thread count, and each index is
/// written by exactly one chunk, so results are independent of scheduling.
void ParallelFor(std::size_t n,
                 const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace rkhspi::internal
