#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace farsim {

// splitmix64 finalizer; the mixing primitive behind all seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable seed derivation: hash a purpose tag (and optional indices) into a
// base seed. Every random stream in the project is derived from one master
// seed through these, so independent jobs can run in any order or thread
// count without changing results.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = mix64(base ^ 0x8f1bbcdc4d9e364bULL);
    for (char c : tag) h = mix64(h ^ static_cast<std::uint8_t>(c));
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t i0) {
    return mix64(derive_seed(base, tag) ^ i0);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t i0,
                                 std::uint64_t i1) {
    return mix64(mix64(derive_seed(base, tag) ^ i0) ^ i1);
}

// Deterministic random generator. mt19937_64 is fully specified by the
// standard; the distributions are hand-rolled because std::*_distribution
// algorithms are implementation-defined and would break bit-reproducibility
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // unbiased uniform integer in [0, bound); bound must be > 0
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % bound;
    }

    // standard normal via Box-Muller; consumes exactly two uniforms
    double next_normal() {
        constexpr double two_pi = 6.283185307179586476925286766559;
        double u1 = next_uniform();
        while (u1 == 0.0) u1 = next_uniform();
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace farsim
