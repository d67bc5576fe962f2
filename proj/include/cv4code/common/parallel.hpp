#pragma once

#include <cstddef>
#include <functional>

namespace cv4code {

/// Worker threads to use: `requested` (0 = hardware concurrency), capped by
/// the CV4CODE_THREADS environment variable when it holds a positive integer.
std::size_t worker_count(std::size_t requested = 0);

/// Calls fn(i) for every i in [0, n) on up to `workers` threads. Items are
/// handed out in increasing order; the first exception thrown is rethrown
/// after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace cv4code
