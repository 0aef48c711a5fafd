#pragma once

#include <cstddef>
#include <functional>

namespace afflabel {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// visited exactly once; callers write only to slot i, so results do not
// depend on the thread count. The first exception thrown by any body is
// rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

// Parses AFFLABEL_THREADS; falls back to 1.
unsigned default_thread_count();

}  // namespace afflabel
