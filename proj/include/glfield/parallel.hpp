#ifndef GLFIELD_PARALLEL_HPP
#define GLFIELD_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace glfield {

inline std::size_t default_jobs() {
    if (const char* env = std::getenv("GLFIELD_JOBS")) {
        long v = std::atol(env);
        if (v >= 1)
            return std::size_t(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs fn(0) ... fn(n_tasks-1) on up to `jobs` workers. Tasks must write to
// disjoint slots; callers reduce sequentially afterwards so that results do
// not depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t n_tasks, Fn&& fn) {
    if (jobs <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::size_t n_workers = std::min(jobs, n_tasks);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w)
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n_tasks)
                    return;
                fn(i);
            }
        });
    for (std::thread& t : workers)
        t.join();
}

} // namespace glfield

#endif
