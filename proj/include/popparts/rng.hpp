// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace popparts {

// splitmix64 finalizer
inline std::uint64_t hash_mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based generator: a draw is a pure function of (seed, stream,
// counter), so parallel consumers stay deterministic regardless of
// scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        return hash_mix(hash_mix(hash_mix(seed_) ^ stream) ^ counter);
    }

    // [0, 1)
    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; consumes two counters per draw
    double gaussian(std::uint64_t stream, std::uint64_t counter) const {
        const double u1 = uniform(stream, 2 * counter);
        const double u2 = uniform(stream, 2 * counter + 1);
        return std::sqrt(-2.0 * std::log1p(-u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t seed_ = 0;
};

// Sequential view over one stream of a CounterRng.
class RngStream {
public:
    RngStream(const CounterRng& rng, std::uint64_t stream)
        : rng_(rng), stream_(stream) {}

    double uniform() { return rng_.uniform(stream_, counter_++); }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    double gaussian() {
        const double g = rng_.gaussian(stream_, counter_);
        ++counter_;
        return g;
    }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        const int span = hi - lo + 1;
        int v = lo + static_cast<int>(uniform() * span);
        return v > hi ? hi : v;
    }

private:
    CounterRng rng_;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace popparts
