#pragma once

#include <functional>

namespace flockfp {

// worker cap: FLOCKFP_THREADS if set (>=1), else hardware concurrency
int max_threads();

// runs fn(0..n-1) across up to max_threads() workers; exceptions rethrown
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace flockfp
