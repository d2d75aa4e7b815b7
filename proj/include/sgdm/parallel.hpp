#pragma once

#include <cstddef>
#include <functional>

namespace sgdm {

/// Worker count from SGDM_THREADS, else the hardware concurrency (at least 1).
unsigned default_threads();

/// Calls body(i) for i in [0, count) on up to `threads` workers (0 = default_threads()).
/// Work is handed out dynamically; callers store results by index so the reduce
/// order never depends on scheduling. The first exception thrown by a body is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace sgdm
