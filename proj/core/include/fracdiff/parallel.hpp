#pragma once

#include <cstddef>
#include <functional>

namespace fracdiff {

/// Number of worker threads used by parallel_for (default: hardware concurrency).
void set_num_threads(unsigned n);
unsigned num_threads();

/// Calls body(i) for i in [begin, end). Iterations must be independent; the
/// result never depends on the thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace fracdiff
