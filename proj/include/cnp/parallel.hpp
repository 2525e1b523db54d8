#pragma once

#include <cstddef>
#include <functional>

namespace cnp {

// Process-wide worker count used by assembly and the linear algebra kernels.
void set_num_threads(int n);
int num_threads();

// When set, reductions use a fixed summation order independent of the thread count.
void set_deterministic(bool on);
bool deterministic();

// Runs fn(i) for i in [begin, end). Iterations are split into contiguous chunks,
// one per worker. fn must not write to state shared between iterations.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

} // namespace cnp
