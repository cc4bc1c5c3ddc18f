#pragma once

#include <functional>

namespace relucert {

/// Run fn(i) for i in [0, n) on up to `workers` threads (0 -> hardware
/// concurrency). Tasks must be independent; the first exception is rethrown
/// after all threads join. Results may not depend on the thread assignment.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

int resolve_workers(int workers);

} // namespace relucert
