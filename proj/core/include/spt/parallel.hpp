#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace spt {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// processed exactly once; callers write results into per-index slots so the
// output does not depend on scheduling. The exception thrown by the lowest
// failing index is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Explicit request wins; otherwise SPT_THREADS; otherwise 1.
unsigned resolve_threads(std::optional<unsigned> requested);

}  // namespace spt
