#pragma once

#include <cstddef>
#include <functional>

namespace hdm {

/// Worker cap used by every parallel loop in the library. Zero means "not set":
/// fall back to HDM_THREADS, then to the hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(begin, end) over a static partition of [0, n). Each index is
/// visited by exactly one worker, so writes to per-index slots need no locks.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace hdm
