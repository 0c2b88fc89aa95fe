#pragma once

// Deterministic data parallelism.
//
// Work is split into fixed-size chunks whose boundaries depend only on the
// problem size, never on the thread count. Callers reduce per-chunk partials
// in chunk order, so results are bit-identical for any `max_threads()`.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mifs {

namespace detail {
inline std::atomic<std::size_t>& thread_cap() {
    static std::atomic<std::size_t> cap{std::max<std::size_t>(1, std::thread::hardware_concurrency())};
    return cap;
}
inline thread_local bool in_worker = false;
} // namespace detail

inline std::size_t max_threads() { return detail::thread_cap().load(); }
inline void set_max_threads(std::size_t n) { detail::thread_cap().store(std::max<std::size_t>(1, n)); }

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) { return chunk == 0 ? 0 : (n + chunk - 1) / chunk; }

// Calls fn(chunk_index, begin, end) for every chunk of [0, n). Nested calls run
// serially on the calling worker.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, Fn&& fn) {
    const std::size_t chunks = chunk_count(n, chunk);
    const std::size_t workers = std::min(chunks, max_threads());
    if (workers <= 1 || detail::in_worker) {
        for (std::size_t c = 0; c < chunks; ++c) {
            fn(c, c * chunk, std::min(n, (c + 1) * chunk));
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        detail::in_worker = true;
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) {
                break;
            }
            try {
                fn(c, c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(chunks);
            }
        }
        detail::in_worker = false;
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t t = 1; t < workers; ++t) {
            pool.emplace_back(body);
        }
        body();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// One task per index.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_chunks(n, 1, [&](std::size_t, std::size_t begin, std::size_t) { fn(begin); });
}

} // namespace mifs
