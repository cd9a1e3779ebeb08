#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace regcd {

/// Run fn(i) for i in [0, count) across `workers` threads. Work is assigned
/// by static striding so the partition of indices is a pure function of
/// (count, workers). The first exception thrown by any worker is rethrown on
/// the calling thread. workers < 1 is treated as 1.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers < 1) workers = 1;
    if (count == 0) return;
    if (workers == 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += n_threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace regcd
