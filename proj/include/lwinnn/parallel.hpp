#pragma once

#include <cstddef>
#include <functional>

namespace lwinnn {

/// 0 means "use the hardware concurrency".
std::size_t resolve_threads(std::size_t requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers using static
/// contiguous blocks. The first exception thrown by any worker is rethrown
/// after all workers have joined.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

} // namespace lwinnn
