#pragma once

#include "speckle/experiment.hpp"

namespace spk {

// Executor over `jobs` worker threads; work items are claimed from a shared
// counter. jobs <= 1 runs inline. The first exception is rethrown after all
// workers stop.
ParallelFor thread_pool_executor(int jobs);

int default_jobs();

}  // namespace spk
