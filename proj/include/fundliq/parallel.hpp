#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace fundliq {

// Runs fn(i) for i in [0, n). Work items must be independent and write only
// to their own output slot; results are then identical for any worker count,
// which is what the CLI's --workers determinism contract relies on.
template <typename Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t n_threads = std::min<size_t>(static_cast<size_t>(workers), n);
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            while (!failed.load(std::memory_order_relaxed)) {
                size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace fundliq
