#pragma once

#include <cstddef>
#include <functional>

namespace modgrad {

/// Worker count: MODGRAD_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker threads. The first exception
/// thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace modgrad
