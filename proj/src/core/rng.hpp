#pragma once

#include <cmath>
#include <cstdint>

namespace mfmdp {

// Counter-based splittable RNG (SplitMix64 finalizer). Each (seed, stream)
// pair is an independent stream; output n is a pure hash of the counter, so
// replications can run on any worker in any order and still reproduce.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed + GOLDEN * (stream + 1)) ^ mix(stream + 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t next_u64() {
        counter_ += GOLDEN;
        return mix(key_ + counter_);
    }

    // Uniform on [0,1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Inverse-CDF exponential with the given rate. log1p keeps precision
    // for small uniforms; u < 1 guarantees a finite result.
    double next_exponential(double rate) {
        return -std::log1p(-next_uniform()) / rate;
    }

    // Index into cumulative weights: smallest k with u*total < cum[k].
    // Caller supplies the running scan; used for transition selection.

private:
    static constexpr std::uint64_t GOLDEN = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace mfmdp
