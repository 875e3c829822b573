#pragma once

#include <cstdint>

namespace ccs {

// SplitMix64 step (Steele, Lea & Flood 2014). Used both as the core generator
// and as the seed/stream mixer, so every draw is a pure function of the seed
// chain and results are bit-identical across platforms and thread counts.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable combine of a seed with a stream/index label.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
    splitmix64(s);
    std::uint64_t t = s ^ stream;
    return splitmix64(t);
}

double normal_quantile(double p, double mean, double variance);  // special_functions.hpp

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform on (0,1): 53-bit mantissa, zero excluded so inverse-CDF draws stay finite.
    double uniform() {
        std::uint64_t bits = next_u64() >> 11;
        double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
        return u;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via inverse CDF; deterministic and platform independent.
    double normal() { return normal_quantile(uniform(), 0.0, 1.0); }

    // Integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Derive an independent child generator for a labelled stream.
    Rng child(std::uint64_t stream) const { return Rng(mix_seed(state_, stream)); }

private:
    std::uint64_t state_;
};

}  // namespace ccs
