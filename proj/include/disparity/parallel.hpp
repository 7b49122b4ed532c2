#pragma once

#include <functional>

namespace disparity {

// Worker count for parallel loops. The DISPARITY_ID_THREADS environment
// variable caps it; otherwise hardware concurrency is used. Always >= 1.
int max_threads();

// Runs fn(i) for i in [0, n) on up to max_threads() workers. Workers own
// contiguous index ranges, so callers that write results into per-index
// slots get order-independent output. The first exception thrown by any
// worker is rethrown after all workers join.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace disparity
