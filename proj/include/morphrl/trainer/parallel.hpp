#pragma once

#include <cstddef>
#include <functional>

namespace morphrl {

// Worker count: MORPHRL_THREADS if set (≥ 1), else hardware concurrency.
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Tasks must
// write only to their own outputs; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace morphrl
