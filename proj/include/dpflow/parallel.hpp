#pragma once

#include <cstddef>
#include <functional>

namespace dpflow {

/// Threads used when a caller passes 0: the hardware concurrency, at least 1.
unsigned default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Indices are claimed dynamically, so bodies must write only to their own
/// slots; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace dpflow
