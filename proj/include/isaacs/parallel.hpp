#pragma once

#include <cstddef>
#include <functional>

namespace isaacs {

/// Worker cap used by every parallel loop in the library. 0 selects
/// std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; results are
/// identical for every worker count since each index writes its own slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace isaacs
