#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace shiftreg {

// Runs body(i) for i in [0, n) on up to `workers` threads using contiguous
// blocks. Callers write results into slot i only, so the output does not
// depend on the worker count. workers <= 0 means hardware concurrency.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
    std::size_t w = workers > 0 ? static_cast<std::size_t>(workers)
                                : std::max(1u, std::thread::hardware_concurrency());
    w = std::min(w, n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(w);
    const std::size_t block = (n + w - 1) / w;
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = t * block;
        const std::size_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace shiftreg
