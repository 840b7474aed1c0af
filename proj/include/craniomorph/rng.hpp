#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace craniomorph {

// Deterministic random source. std::mt19937_64 is bit-specified by the
// standard; the uniform and gaussian transforms below are written out
// explicitly (std::normal_distribution is implementation-defined, which
// would break cross-compiler reproducibility of generated datasets).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform in [0,1) with 53-bit resolution
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller; caches the second value
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable seed derivation (SplitMix64 mixing) so per-entry streams are
// independent of generation order and of how many values earlier entries drew.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace craniomorph
