#pragma once

#include <cstddef>
#include <functional>

namespace magnify {

/// Worker count used by sampling loops. Defaults to the MAGNIFY_THREADS
/// environment variable, else 1.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, count). Each index writes only its own output
/// slot, so results are independent of the thread count. Exceptions from any
/// index are rethrown on the caller (first by index).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace magnify
