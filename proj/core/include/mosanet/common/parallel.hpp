#pragma once

#include <cstddef>
#include <functional>

namespace mosanet {

/// Number of worker threads to use for `jobs` (0 means logical cores).
int resolve_jobs(int jobs);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots so that output does not depend on scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace mosanet
