#pragma once

// Process-wide parallelism cap.  One environment variable controls every
// parallel loop in the library; the default is the hardware count.  Grid
// evaluation is the only consumer today: each output point writes its own
// slot, so results are bit-identical at any thread count.

#include <cstddef>
#include <functional>

namespace dbf {

// Effective worker count: DBARFORGE_THREADS clamped to [1, hardware].  An
// unset, empty, or unparsable variable falls back to the hardware count.
int thread_limit();

// Runs fn(begin, end) over a block partition of [0, count) on thread_limit()
// workers.  Serial (no thread spawn) when the limit is 1 or count is small.
// fn must write only to slots in its own range.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace dbf
