#pragma once

#include <cstddef>
#include <functional>

namespace chaosbench {

/// Worker cap from CHAOSBENCH_THREADS, or the hardware concurrency when the
/// variable is unset or malformed. Always at least 1.
int default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads using a static
/// block partition. Callers must make body(i) depend only on i (each index
/// owns its output slot and its RNG stream); under that contract the results
/// do not depend on the worker count.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace chaosbench
