#pragma once

// Deterministic work partitioning: work is split into a fixed number of
// chunks independent of the thread count, each chunk owns its own RNG
// substream, and reductions run sequentially in chunk order.  Thread count
// therefore affects scheduling only, never results.

#include <functional>

namespace degrade {

/// Resolve a requested thread count: 0 means "DEGRADE_THREADS env var, else
/// hardware concurrency".
int resolve_threads(int requested);

/// Run work(chunk) for chunk in [0, nchunks) on up to nthreads threads.
/// work must only write to chunk-owned state.
void parallel_chunks(int nchunks, int nthreads,
                     const std::function<void(int)>& work);

}  // namespace degrade
