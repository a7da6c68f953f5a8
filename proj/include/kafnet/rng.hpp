#pragma once

#include <cstdint>

namespace kafnet {

// Counter-based generator: output n is mix64(key + (n+1)*GAMMA), the
// SplitMix64 scheme. Streams are independent keyed substreams of one seed,
// so sampling order can be reorganized (or parallelized per stream index)
// without changing any draw. All integer arithmetic, hence identical output
// on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next_u64() noexcept;

    // uniform in [0, 1), 53-bit resolution
    double real01() noexcept;
    double uniform(double lo, double hi) noexcept;
    // unbiased integer in [0, n), n >= 1
    std::uint64_t below(std::uint64_t n) noexcept;
    // Marsaglia polar method (avoids trig; only sqrt/log from libm)
    double normal(double mean = 0.0, double stddev = 1.0) noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kafnet
