#pragma once

#include <cstddef>
#include <functional>

namespace dgd {

/// Worker count used by the renderer and trainer: `DGD_THREADS` when set to a
/// positive integer, otherwise the hardware concurrency (at least 1).
[[nodiscard]] std::size_t default_thread_count();

/// Splits [0, count) into `threads` contiguous chunks and runs
/// `body(begin, end, chunk_index)` on each. The partition depends only on
/// `count` and `threads`, so per-chunk partial results can be reduced in chunk
/// order for a deterministic sum.
void parallel_chunks(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

/// Number of chunks `parallel_chunks` will use for the given arguments.
[[nodiscard]] std::size_t chunk_count(std::size_t count, std::size_t threads);

}  // namespace dgd
