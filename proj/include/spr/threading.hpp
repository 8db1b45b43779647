#pragma once

#include <functional>

namespace spr {

/// Global worker cap for parallel_for. Defaults to the hardware thread count.
int max_threads();
void set_max_threads(int n);

/// Runs fn(i) for i in [0, n), split into contiguous blocks across workers.
/// Callers must write results to disjoint slots; reductions that depend on
/// order happen serially after the loop so results do not depend on the
/// thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace spr
