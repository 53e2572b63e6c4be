// Shared small utilities: numeric formatting, deterministic reductions, parallel loops.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace firesale {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// All numeric text output goes through this: 12 significant digits, stable across runs.
inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PreconditionViolated : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Sum of a batch of values after sorting them ascending. The result depends only on
// the multiset of values, so reductions built on this are invariant under permutations
// of the institutions.
inline double sorted_sum(std::vector<double>& batch) {
    std::sort(batch.begin(), batch.end());
    double s = 0.0;
    for (double v : batch) s += v;
    return s;
}

inline unsigned thread_count() {
    if (const char* env = std::getenv("FIRESALE_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1u;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions in workers are
// rethrown on the caller thread (first one wins).
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (count == 0) return;
    if (threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::vector<std::thread> pool;
    unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::atomic<int> error_claimed{0};
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (error_claimed.exchange(1) == 0) error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace firesale
