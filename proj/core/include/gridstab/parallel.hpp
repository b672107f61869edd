#pragma once

#include <cstddef>
#include <functional>

namespace gridstab {

/// Worker count used when callers pass 0: the GRIDSTAB_WORKERS environment
/// variable when set, otherwise std::thread::hardware_concurrency().
unsigned default_workers();

/// Runs body(i) for every i in [0, count) on up to `workers` threads.
/// Indices are handed out dynamically; callers that need deterministic
/// output must write results into slot i and reduce afterwards. The first
/// exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace gridstab
