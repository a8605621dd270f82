#pragma once

#include <cstddef>
#include <functional>

namespace splatfeat {

/// Resolves a requested worker count: values <= 0 mean "use the default",
/// which is SPLATFEAT_THREADS when set, else hardware concurrency.
int resolve_threads(int requested);

/// Runs body(begin, end) over a static partition of [0, count) into
/// contiguous chunks. Each index is visited exactly once; the partition
/// depends only on (count, threads), so callers that write to disjoint
/// slots get scheduling-independent results.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace splatfeat
