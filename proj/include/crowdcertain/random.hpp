#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace crowdcertain {

// Seedable generator wrapping mt19937_64. Distributions are implemented here
// rather than with <random> distributions so sequences are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent stream for a (seed, purpose) pair, e.g. ("thresholds", 7).
    static Rng substream(std::uint64_t seed, std::string_view tag);

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [0, n). n must be positive.
    std::size_t below(std::size_t n);

    // Standard normal (Box-Muller, one cached spare).
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace crowdcertain
