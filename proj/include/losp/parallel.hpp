#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace losp {

/// Number of worker threads used when a caller passes `threads == 0`.
unsigned default_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default).
/// Work is claimed dynamically; callers write results into slot i so the
/// outcome never depends on scheduling. The first exception thrown by any
/// task is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

/// Splits replications [0, reps) into fixed-size chunks, runs
/// body(partial, rep) for each replication with one Partial per chunk, and
/// returns the partials in chunk order. The chunking does not depend on the
/// thread count, so merged results are schedule-independent.
template <typename Partial, typename Body>
std::vector<Partial> reduce_reps(std::uint64_t reps, Body&& body, unsigned threads = 0,
                                 std::uint64_t chunk = 256) {
  const std::uint64_t chunks = (reps + chunk - 1) / chunk;
  std::vector<Partial> partials(chunks);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::uint64_t begin = c * chunk;
        const std::uint64_t end = std::min(reps, begin + chunk);
        for (std::uint64_t rep = begin; rep < end; ++rep) body(partials[c], rep);
      },
      threads);
  return partials;
}

}  // namespace losp
