#pragma once

#include <functional>

namespace faim {

// Default worker count: FAIM_THREADS env var if set, otherwise hardware
// concurrency. A cap of 1 disables spawning entirely.
int default_thread_count();

// Runs fn(begin, end) over disjoint contiguous chunks of [0, n). Each index is
// processed by exactly one worker, so any computation whose per-index result
// does not depend on chunking is deterministic regardless of thread count.
void parallel_chunks(int n, int threads, const std::function<void(int, int)>& fn);

}  // namespace faim
