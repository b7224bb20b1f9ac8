#pragma once

#include <functional>

namespace graphflow {

// Worker count: GRAPHFLOW_THREADS if set (clamped to [1, 64]), otherwise the
// hardware concurrency.
int worker_count();

// Splits [0, n) into worker_count() contiguous chunks and runs
// fn(chunk_index, begin, end) for each, in parallel. The chunk decomposition
// depends only on n and the worker count, so per-chunk reductions combine
// deterministically.
void parallel_chunks(int n, const std::function<void(int, int, int)>& fn);

}  // namespace graphflow
