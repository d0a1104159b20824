#pragma once

#include <cstddef>
#include <functional>

namespace celab {

// Worker count actually used: `requested` (0 = hardware), capped by the
// CE_LAB_THREADS environment variable when it is set.
unsigned effective_threads(unsigned requested = 0);

// Runs fn(i) for every i in [0, n). Work is handed out through an atomic
// chunk counter; callers must write results into index-addressed storage,
// which keeps the outcome byte-identical for any worker count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace celab
