#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace imb {

/// Evaluates f(0) .. f(count - 1) on up to `jobs` threads and returns the
/// results in index order. jobs <= 0 means hardware concurrency. The first
/// exception thrown by any task is rethrown after all workers stop.
template <class F>
auto parallel_map(std::size_t count, int jobs, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
    using R = decltype(f(std::size_t{}));
    std::vector<R> out(count);
    unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace imb
