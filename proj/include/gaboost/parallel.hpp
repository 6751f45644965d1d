#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gaboost {

// Runs fn(0..n-1) over at most `threads` workers on contiguous index chunks.
// Tasks must be independent and write only to their own slot; results are
// then identical for any thread count. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    const auto workers = static_cast<std::size_t>(threads < 1 ? 1 : threads);
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t used = std::min(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(used);
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + used - 1) / used;
    for (std::size_t w = 0; w < used; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gaboost
