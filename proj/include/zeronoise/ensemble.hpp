#pragma once

// Index-parallel loops for path ensembles. Work for index i must depend
// only on i; results land in caller-owned slots, so outputs do not depend
// on the thread count.

#include <cstddef>
#include <functional>

namespace zeronoise {

/// Worker count: ZERONOISE_THREADS if set and positive, otherwise
/// std::thread::hardware_concurrency() (at least 1).
unsigned thread_count();

/// Calls fn(i) for i in [0, n) on up to thread_count() threads. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace zeronoise
