#pragma once

#include <cstddef>
#include <functional>

namespace rth {

// Worker count: RTH_THREADS if set and positive, otherwise hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, count). Each index is visited exactly once; the
// caller must make body(i) write only to slot i so results do not depend on
// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rth
