#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace orderflow {

namespace detail {

inline std::size_t initial_thread_count() {
    if (const char* env = std::getenv("ORDERFLOW_THREADS")) {
        const long v = std::atol(env);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

inline std::atomic<std::size_t>& thread_count_slot() {
    static std::atomic<std::size_t> count{initial_thread_count()};
    return count;
}

}  // namespace detail

inline std::size_t thread_count() { return detail::thread_count_slot().load(); }

inline void set_thread_count(std::size_t n) {
    detail::thread_count_slot().store(n > 0 ? n : 1);
}

// Runs body(i) for i in [begin, end). Each index is computed independently
// and written to disjoint slots, so results are identical for any thread
// count. The first exception thrown by any worker is rethrown here.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, F&& body) {
    if (end <= begin) return;
    const std::size_t n = end - begin;
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{begin};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= end) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace orderflow
