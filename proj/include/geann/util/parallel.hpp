#pragma once

#include <cstddef>
#include <functional>

namespace geann::util {

/// Worker count: GEANN_THREADS if set and > 0, else hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) over up to thread_count() threads. Each index
/// is visited exactly once; bodies must not share mutable state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace geann::util
