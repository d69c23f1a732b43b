#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace plar::detail {

/// Worker-thread cap: PLAR_THREADS environment variable, where 0 or unset
/// means "use all hardware threads".
inline int thread_budget() {
    int budget = 0;
    if (const char* env = std::getenv("PLAR_THREADS")) {
        budget = std::atoi(env);
    }
    if (budget <= 0) {
        budget = static_cast<int>(std::thread::hardware_concurrency());
    }
    return std::max(budget, 1);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Tasks must
/// write to disjoint state; completion order is unspecified, so results
/// must be collected into preallocated slots indexed by i.
inline void parallel_tasks(std::size_t count, int threads,
                           const std::function<void(std::size_t)>& fn) {
    threads = std::min<std::size_t>(std::max(threads, 1), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Chunked index-range variant for tight numeric loops.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    threads = std::max(threads, 1);
    if (threads <= 1 || count < 256) {
        body(0, count);
        return;
    }
    const std::size_t chunk = (count + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    std::vector<std::size_t> begins;
    for (std::size_t b = 0; b < count; b += chunk) begins.push_back(b);
    parallel_tasks(begins.size(), threads, [&](std::size_t k) {
        const std::size_t b = begins[k];
        body(b, std::min(b + chunk, count));
    });
}

}  // namespace plar::detail
