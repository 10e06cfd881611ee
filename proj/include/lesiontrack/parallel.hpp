#pragma once

#include <cstddef>
#include <functional>

namespace lesiontrack {

/// Runs fn(0..n-1) on up to `workers` threads. Work is claimed dynamically;
/// callers write results into per-index slots so output never depends on
/// scheduling. If any call throws, the exception of the lowest index is
/// rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace lesiontrack
