#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace occugrasp {

/// Worker count used when a caller passes 0.
int default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers, static contiguous
/// chunks. fn must write only to slots owned by i, which keeps results
/// independent of the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace occugrasp
