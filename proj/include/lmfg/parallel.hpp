#pragma once

#include <cstddef>
#include <functional>

namespace lmfg {

/// Worker count for parallel_for; 0 means hardware concurrency.
void set_threads(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Each index is visited once; callers write to
/// disjoint slots, so results do not depend on the thread count. The first
/// exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lmfg
