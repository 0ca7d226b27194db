#pragma once

#include <cstddef>
#include <functional>

namespace shapshift {

// Number of workers used by parallel sections. Defaults to the hardware
// concurrency; the SHAPSHIFT_THREADS environment variable caps it.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Work is distributed over worker_count()
// threads in fixed index blocks, so any reduction the caller performs in
// index order is independent of scheduling. Exceptions thrown by fn are
// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace shapshift
