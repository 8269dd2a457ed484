#pragma once

#include <cstddef>
#include <functional>

namespace epa {

/// Worker threads for embarrassingly parallel loops. Reads EPA_THREADS,
/// falling back to the hardware concurrency (at least 1).
std::size_t worker_count();

/// Splits [0, count) into contiguous chunks, one per worker, and runs
/// body(begin, end) on each. Each index is visited exactly once, so results
/// written per index do not depend on the thread count. Calls made from
/// inside a worker run serially.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace epa
