#pragma once

#include <cstddef>
#include <functional>

namespace npmddm {

/// Runs body(i) for i in [0, n) on up to `threads` workers (static chunking).
/// The first exception thrown by any task is rethrown on the calling thread.
/// threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace npmddm
