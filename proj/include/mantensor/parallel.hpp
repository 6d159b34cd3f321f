#pragma once

#include <cstdint>
#include <functional>

namespace mantensor {

// Global cap on worker threads used by entry-parallel kernels.
// 0 or 1 means sequential. Thread-safe.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n). Each index writes only its own output slot,
// so results are identical for any thread count. Reductions are left to
// the caller and run sequentially.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace mantensor
