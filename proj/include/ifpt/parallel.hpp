#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace ifpt {

/// Runs fn(block_index, begin, end) over [0, n) split into fixed-size
/// blocks. Blocks are claimed dynamically but identified by index, so
/// callers that store per-block partial results and combine them in
/// block order get thread-count-independent, reproducible sums.
inline void parallel_blocks(long n, long block_size, int threads,
                            const std::function<void(long, long, long)>& fn) {
    const long n_blocks = (n + block_size - 1) / block_size;
    if (threads <= 1 || n_blocks <= 1) {
        for (long b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        return;
    }
    std::atomic<long> next{0};
    auto worker = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<long>(threads, n_blocks);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace ifpt
