// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_PARALLEL_HPP
#define GEPSBP_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gepsbp {

inline auto DefaultThreadCount() -> std::size_t { return std::max(1U, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) over `threads` workers using contiguous blocks.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t threads, Fn&& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) { fn(i); }
        return;
    }
    std::exception_ptr error;
    std::mutex errorMutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    auto block = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        auto lo = t * block;
        auto hi = std::min(n, lo + block);
        if (lo >= hi) { break; }
        workers.emplace_back([&, lo, hi] {
            try {
                for (auto i = lo; i < hi; ++i) { fn(i); }
            } catch (...) {
                std::lock_guard lock(errorMutex);
                if (!error) { error = std::current_exception(); }
            }
        });
    }
    for (auto& w : workers) { w.join(); }
    if (error) { std::rethrow_exception(error); }
}

} // namespace gepsbp

#endif
