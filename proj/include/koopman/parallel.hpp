// Minimal static-partition parallel loop used by the Monte-Carlo drivers.
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace koopman {

/// Number of workers for a `threads` request; 0 means hardware concurrency.
inline unsigned resolve_threads(unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    return threads;
}

/**
 * Calls body(i) for i in [0, n) on up to `threads` workers. Each index is
 * visited exactly once; callers write into per-index slots so the result
 * does not depend on scheduling. The first exception thrown is rethrown.
 */
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body &&body) {
    threads = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto &t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace koopman
