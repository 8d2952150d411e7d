#pragma once

#include <cstdint>
#include <functional>

namespace dpdg {

/// Worker cap: min(DPDG_THREADS if set, hardware concurrency), at least 1.
int worker_count();

/// Runs fn(i) for i in [0, n_items) across workers.  Callers make results
/// order-independent by writing into per-index slots and reducing after.
void parallel_for(std::int64_t n_items, const std::function<void(std::int64_t)>& fn);

}  // namespace dpdg
