#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace ammfg {

using Rng = std::mt19937_64;

/// Independent deterministic stream for (seed, stream_id).
Rng make_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware).
/// Work is split in contiguous blocks; callers reduce results in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

} // namespace ammfg
