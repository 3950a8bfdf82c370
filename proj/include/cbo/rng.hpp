#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cbo {

// Deterministic stream splitting: every randomized component owns an Rng
// derived from (base seed, labels) so runs replay bit-for-bit.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t seed) { return splitmix64(seed); }

inline std::uint64_t seed_mix(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = splitmix64(seed);
    for (unsigned char ch : label) h = splitmix64(h ^ ch);
    return h;
}

template <class... Rest>
std::uint64_t seed_mix(std::uint64_t seed, std::string_view label, std::uint64_t index, Rest... rest) {
    return seed_mix(splitmix64(seed_mix(seed, label) ^ splitmix64(index)), rest...);
}

// mt19937_64 stream with hand-rolled float draws. std::uniform_real_distribution
// is not pinned by the standard, so doubles are built from raw 64-bit words to
// keep traces identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased draw in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cbo
