#pragma once

// Per-path random streams and a deterministic parallel map.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace scaleclock {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// (seed, stream_index) names a reproducible stream; substreams separate the
/// Gaussian increments from auxiliary uniforms.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    std::mt19937_64 engine(std::uint64_t substream = 0) const {
        const std::uint64_t k = splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL) ^
                                           splitmix64(substream + 0xD1B54A32D192ED03ULL));
        return std::mt19937_64(k);
    }
    RngStream child(std::uint64_t i) const { return {splitmix64(seed ^ splitmix64(index)), i}; }
};

/// out[i] = fn(i) for i < n, split into contiguous blocks over `threads`
/// workers. The result does not depend on the thread count.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned threads, F&& fn) {
    std::vector<T> out(n);
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

inline unsigned default_threads() {
    const unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : h;
}

}  // namespace scaleclock
