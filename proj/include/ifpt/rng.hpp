#pragma once

#include <cstdint>
#include <random>

namespace ifpt {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for an independent substream. Streams are keyed by (path, slot);
/// the slot convention across the Monte Carlo modules is
///   0: asset-driving Brownian W, 1: orthogonal Brownian Z (the credit
///   driver when there is no asset), 2: initial credit index Y_0,
///   3: exponential default threshold U.
/// Identical (seed, path, slot) always reproduces the same draws, which
/// is what makes common-random-number comparisons across estimators exact.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t path, std::uint64_t slot) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s + path);
    s = splitmix64(s + slot);
    return s;
}

class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint64_t slot)
        : engine_(substream_seed(seed, path, slot)) {}

    double next() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

class ExpStream {
public:
    ExpStream(std::uint64_t seed, std::uint64_t path, std::uint64_t slot)
        : engine_(substream_seed(seed, path, slot)) {}

    double next() {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double v;
        do { v = u(engine_); } while (v <= 0.0);
        return -std::log(v);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace ifpt
