#ifndef H2ENT_RNG_HPP
#define H2ENT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace h2ent::rng {

// splitmix64 finalizer (Steele/Lea/Flood). Used both as a sequential generator
// and as a mixer for deriving independent substream keys.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Small deterministic stream. Reproducibility matters more than period here:
// every consumer derives its own stream from (seed, role, indices), so streams
// are short and never shared between threads.
struct Stream {
    std::uint64_t state = 0;

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (cosine branch; one normal per two uniforms,
    // so the draw count per call is fixed and scheduling-independent).
    double next_normal() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

// Derive a stream key from a seed plus role/index parts. Order-sensitive.
template <typename... Parts>
Stream make_stream(std::uint64_t seed, Parts... parts) {
    std::uint64_t key = mix64(seed ^ 0xA5A5A5A55A5A5A5AULL);
    ((key = mix64(key ^ static_cast<std::uint64_t>(parts))), ...);
    return Stream{key};
}

// Role tags keeping independent consumers on disjoint streams.
enum StreamRole : std::uint64_t {
    kSampleConfig = 1,  // exact-sampler categorical draw + jitter
    kWalkerInit = 2,    // TDQMC walker initialization
    kWalkerStep = 3,    // TDQMC drift-diffusion step
    kBootstrap = 4,     // resampling audits in tests
};

} // namespace h2ent::rng

#endif
