#pragma once

#include <cstdint>

namespace capstat {

// Portable seeded PRNG: xoshiro256++ state initialized by a splitmix64 chain.
// The algorithm is fixed so identical (seed, substream key) sequences are
// reproducible across platforms and standard libraries. `substream` derives an
// independent stream for a worker (job index, bootstrap replicate, ...) so
// generation can run in parallel with results independent of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Derived stream: mixes the original seed with a caller-chosen key.
    Rng substream(std::uint64_t key) const;

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1); never returns an exact 0 or 1.
    double uniform();

    // Uniform on (lo, hi).
    double uniform(double lo, double hi);

    // Standard normal via the inverse-CDF method (one uniform per draw, so
    // stream accounting is exact and sequences are skippable by counting).
    double normal();
    double normal(double mean, double sd);

    bool bernoulli(double p);

private:
    Rng() = default;
    std::uint64_t state_[4];
    std::uint64_t seed_ = 0;
};

namespace rng_detail {
std::uint64_t splitmix64(std::uint64_t& x);
}

}  // namespace capstat
