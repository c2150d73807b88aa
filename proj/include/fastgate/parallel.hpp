#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fastgate {

/// Run fn(i) for i in [0, count) on up to `workers` threads. Tasks are
/// claimed from a shared counter; callers write results into slot i so the
/// aggregate never depends on completion order. The first exception thrown
/// by any task is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn &&fn) {
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(std::min(threads, count));
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

/// results[i] = fn(i), computed in parallel.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, int workers, Fn &&fn) {
    std::vector<T> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

}  // namespace fastgate
