#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace regret {

/**
 * Worker count for grid sweeps: the REGRET_THREADS environment variable if
 * set, otherwise 1.  Sweeps are embarrassingly parallel over cells and every
 * reduction used (max over cells) is exact, so results are bitwise identical
 * for any worker count.
 */
inline int default_thread_count() {
    if (const char* env = std::getenv("REGRET_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

/**
 * Run f(chunk_id, begin, end) over a static partition of [0, total) into
 * `threads` contiguous chunks.  The partition depends only on (total,
 * threads), not on timing.
 */
template <class F>
void parallel_chunks(std::size_t total, int threads, F&& f) {
    if (threads <= 1 || total < 2) {
        f(0, std::size_t{0}, total);
        return;
    }
    const std::size_t nchunk = std::min<std::size_t>(static_cast<std::size_t>(threads), total);
    std::vector<std::thread> pool;
    pool.reserve(nchunk);
    const std::size_t base = total / nchunk, rem = total % nchunk;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < nchunk; ++c) {
        const std::size_t len = base + (c < rem ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&f, c, begin, end] { f(static_cast<int>(c), begin, end); });
        begin = end;
    }
    for (std::thread& t : pool) t.join();
}

} // namespace regret
