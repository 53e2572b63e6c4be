// Counter-based random number generation with explicit stream derivation.
//
// The generator is stateless apart from (key, counter): output i of a stream is
// mix64(key + i * GOLDEN), the SplitMix64 sequence seeded at `key`. Streams and
// child seeds are derived through the bijective mix64 finalizer, so distinct
// (sweep, replication) pairs are guaranteed distinct child seeds for any master.
// This mapping is part of the output contract and must stay stable across versions.
#pragma once

#include <cmath>
#include <cstdint>

namespace firesale {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    // Independent stream of the same seed; stream 0 is the base stream.
    static CounterRng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return CounterRng(mix64(seed + kGolden * (stream_id + 1)));
    }

    std::uint64_t next_u64() { return mix64(key_ + kGolden * counter_++); }

    // Uniform on the open interval (0, 1); safe for -log(u) and u^{-a}.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

    // Pareto with survival function x^{1-beta} on [1, inf): inverse CDF of a uniform.
    double next_pareto(double beta) { return std::pow(next_unit(), -1.0 / (beta - 1.0)); }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

// Injective for (sweep_index, replication_index) pairs below 2^32 at fixed master:
// the packed pair is passed through bijective mixing and added to the master key.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t sweep_index,
                                std::uint64_t replication_index) {
    std::uint64_t packed = (sweep_index << 32) | (replication_index & 0xFFFFFFFFull);
    return mix64(master + mix64(packed + 1));
}

}  // namespace firesale
