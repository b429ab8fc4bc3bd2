#pragma once

#include <cstdint>

namespace ssdpulse {

// Deterministic, platform-independent generator: xoshiro256++ seeded through
// splitmix64. Same seed gives the same stream on every build and OS.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; the second value of each pair is
    // cached so consumption order stays deterministic.
    double gaussian();

private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// splitmix64 step, exposed for deriving independent substreams from one seed.
std::uint64_t splitmix64_next(std::uint64_t& state);

}  // namespace ssdpulse
