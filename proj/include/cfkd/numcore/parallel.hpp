#pragma once

#include <cstddef>
#include <functional>

namespace cfkd::numcore {

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Work items must not
/// share mutable state; callers write results into per-index slots. The first
/// exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

} // namespace cfkd::numcore
