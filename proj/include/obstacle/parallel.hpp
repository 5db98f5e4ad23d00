#pragma once

#include <cstddef>
#include <functional>

namespace obstacle {

/// Worker count for parallel loops; values below 1 mean 1.
void set_thread_count(int threads);
int thread_count();

/// Calls fn(i) for i in [0, n) on up to thread_count() threads. Iterations
/// must write disjoint outputs; the first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace obstacle
