#ifndef CONFORMAL_DETAIL_PARALLEL_HPP_
#define CONFORMAL_DETAIL_PARALLEL_HPP_
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace conformal::detail {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Work is split into contiguous chunks; callers write results by index, so the outcome
/// does not depend on scheduling. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(std::size_t count, Body &&body, std::size_t threads = 0) {
    if (threads == 0) {
        threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        workers.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                const std::lock_guard lock{ failure_mutex };
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto &w : workers) {
        w.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace conformal::detail

#endif  // CONFORMAL_DETAIL_PARALLEL_HPP_
