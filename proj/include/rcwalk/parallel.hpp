#pragma once

#include <cstddef>
#include <functional>

namespace rcwalk {

// Thread count from RCWALK_THREADS, else hardware concurrency.
int configured_threads();

// Runs fn(i) for i in [0, n). Each call must write only to slot i of its
// outputs; results then do not depend on scheduling. The exception raised by
// the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace rcwalk
