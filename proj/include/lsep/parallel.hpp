#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lsep {

// Runs f(i) for i in [0, n) on up to `threads` workers.  Results must go to slots
// indexed by i, which keeps the outcome independent of scheduling.  The exception of
// the smallest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    std::size_t w = std::min<std::size_t>(threads > 1 ? static_cast<std::size_t>(threads) : 1, n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> err(n);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    f(i);
                } catch (...) {
                    err[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
}

}  // namespace lsep
