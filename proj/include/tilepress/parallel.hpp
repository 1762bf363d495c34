#pragma once

#include <cstddef>
#include <functional>

namespace tp {

// Worker count: hardware concurrency capped by TILEPRESS_THREADS.
int worker_count();
// Runs fn(begin, end) over contiguous chunks of [0, count). Chunks are fixed by count and
// worker count only; callers write results by index so merges are order-independent.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace tp
