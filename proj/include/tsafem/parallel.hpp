#ifndef TSAFEM_PARALLEL_HPP
#define TSAFEM_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsafem {

namespace detail {
inline std::atomic<int>& thread_cap()
{
    static std::atomic<int> cap{0};
    return cap;
}
}  // namespace detail

/// Caps the worker count of parallel loops; 0 means hardware concurrency.
inline void set_thread_count(int n) { detail::thread_cap() = std::max(0, n); }

inline int thread_count()
{
    const int cap = detail::thread_cap();
    const int hw = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    return cap > 0 ? cap : hw;
}

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Work is
/// split into contiguous blocks; callers write to per-index slots so that
/// the result does not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mtx;
    auto work = [&] {
        try {
            for (std::size_t i = next++; i < n; i = next++)
                fn(i);
        } catch (...) {
            std::lock_guard lock(error_mtx);
            if (!error)
                error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace tsafem

#endif  // TSAFEM_PARALLEL_HPP
