#pragma once

#include <cstddef>

namespace mfheat {

/// Worker count for data-parallel passes. Defaults to MATFREE_THREADS when set,
/// otherwise the OpenMP default.
[[nodiscard]] int thread_count();
void set_thread_count(int n);

/// Runs body(task) for task in [0, n). Tasks are independent; the call returns
/// after all of them finish, which is the barrier between passes.
template <class Body>
void parallel_for(std::size_t n, Body&& body)
{
    const int threads = thread_count();
    if (threads <= 1 || n < 2) {
        for (std::size_t t = 0; t < n; ++t) {
            body(t);
        }
        return;
    }
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long t = 0; t < count; ++t) {
        body(static_cast<std::size_t>(t));
    }
}

}  // namespace mfheat
