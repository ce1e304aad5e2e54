#pragma once

#include <cstddef>
#include <functional>

namespace wirepipe {

/// Worker count resolution: explicit request > WIREPIPE_THREADS env >
/// hardware concurrency. Always >= 1.
int resolve_threads(int requested = 0);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Blocks until all
/// items finish; rethrows the first exception. Work items must not share
/// mutable state unless externally synchronized.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace wirepipe
