#pragma once

#include <cstddef>
#include <functional>

namespace tdb {

// Worker count: KGC_THREADS when set to a positive integer, else hardware concurrency (>= 1).
std::size_t thread_count();

// Splits [0, n) into `chunks` contiguous ranges (chunks clamped to [1, n]) and runs
// fn(chunk, begin, end) for each, one thread per chunk. Chunk boundaries depend only
// on n and chunks, so callers reducing per-chunk results in chunk order are deterministic.
void parallel_chunks(std::size_t n, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace tdb
