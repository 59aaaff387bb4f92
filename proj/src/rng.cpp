#include "iscc/rng.hpp"

#include <cmath>

namespace iscc {

namespace {

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::mt19937_64 make_engine(uint64_t seed, std::string_view label) {
    // Mix the user seed with the label hash, then expand into seed material.
    uint64_t state = seed ^ (fnv1a64(label) + 0x9e3779b97f4a7c15ull);
    std::seed_seq seq{static_cast<uint32_t>(splitmix64(state)), static_cast<uint32_t>(splitmix64(state) >> 32),
                      static_cast<uint32_t>(splitmix64(state)), static_cast<uint32_t>(splitmix64(state) >> 32),
                      static_cast<uint32_t>(splitmix64(state)), static_cast<uint32_t>(splitmix64(state) >> 32),
                      static_cast<uint32_t>(splitmix64(state)), static_cast<uint32_t>(splitmix64(state) >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(uint64_t seed, std::string_view label) : engine_(make_engine(seed, label)) {}

uint64_t RngStream::raw() { return engine_(); }

double RngStream::uniform() {
    // 53 high bits -> double in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

cplx RngStream::cgaussian(double variance) {
    double s = std::sqrt(variance / 2.0);
    return {s * gaussian(), s * gaussian()};
}

uint64_t RngStream::uniform_index(uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling keeps the map unbiased.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

RngStream rng_substream(uint64_t seed, std::string_view label) { return RngStream(seed, label); }

}  // namespace iscc
