#include "capstat/rng.hpp"

#include "capstat/special.hpp"

namespace capstat {

namespace rng_detail {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace rng_detail

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = rng_detail::splitmix64(x);
}

Rng Rng::substream(std::uint64_t key) const {
    // Stream seed = splitmix64 of (seed XOR golden-ratio-scrambled key).
    std::uint64_t x = seed_ ^ (key * 0x9E3779B97F4A7C15ULL + 0x243F6A8885A308D3ULL);
    std::uint64_t derived = rng_detail::splitmix64(x);
    return Rng(derived);
}

std::uint64_t Rng::next_u64() {
    std::uint64_t* s = state_;
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double Rng::uniform() {
    // 53-bit mantissa, offset by half an ulp so the result is strictly inside (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return normal_quantile(uniform()); }

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

bool Rng::bernoulli(double p) { return uniform() < p; }

}  // namespace capstat
