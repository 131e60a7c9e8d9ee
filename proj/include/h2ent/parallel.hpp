#ifndef H2ENT_PARALLEL_HPP
#define H2ENT_PARALLEL_HPP

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace h2ent {

// Worker count: H2ENT_WORKERS when set (must parse to >= 1), otherwise the
// hardware concurrency. Results never depend on this value; it only controls
// how item ranges are split across threads.
inline int worker_count() {
    if (const char* env = std::getenv("H2ENT_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 4096)
            throw std::runtime_error("H2ENT_WORKERS must be an integer in [1, 4096]");
        return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(begin, end) over contiguous chunks of [0, n_items). Each invocation
// owns a disjoint index range, so any per-item writes are race-free and the
// outcome is identical for every worker count.
template <typename Fn>
void parallel_for_chunks(int n_items, Fn&& fn, int workers = 0) {
    if (n_items <= 0) return;
    if (workers <= 0) workers = worker_count();
    workers = std::min(workers, n_items);
    if (workers == 1) {
        fn(0, n_items);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int base = n_items / workers;
    const int extra = n_items % workers;
    int begin = 0;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int w = 0; w < workers; ++w) {
        const int len = base + (w < extra ? 1 : 0);
        const int end = begin + len;
        pool.emplace_back([&fn, begin, end, &err, &err_mu]() {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace h2ent

#endif
