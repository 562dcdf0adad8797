#include "mfheat/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace mfheat {

namespace {

int initial_threads()
{
    if (const char* env = std::getenv("MATFREE_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) {
                return n;
            }
        }
        catch (const std::exception&) {
        }
    }
    return omp_get_max_threads();
}

std::atomic<int>& threads_setting()
{
    static std::atomic<int> n{initial_threads()};
    return n;
}

}  // namespace

int thread_count()
{
    return threads_setting().load(std::memory_order_relaxed);
}

void set_thread_count(int n)
{
    threads_setting().store(n > 0 ? n : 1, std::memory_order_relaxed);
}

}  // namespace mfheat
