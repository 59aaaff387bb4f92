#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "iscc/types.hpp"

namespace iscc {

/// Seeded random stream addressed by (seed, label).
///
/// Streams with the same (seed, label) produce bit-identical draws across runs
/// and platforms: the engine is the standard-mandated mt19937_64 and all
/// variates (uniform, Gaussian) are synthesized here rather than through
/// std::*_distribution, whose outputs are implementation defined.
/// Distinct labels give independent substreams, so parallel workers can each
/// derive their own stream without sharing state.
class RngStream {
public:
    RngStream(uint64_t seed, std::string_view label);

    /// Uniform in [0, 1).
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (deterministic across platforms).
    double gaussian();

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    cplx cgaussian(double variance = 1.0);

    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n);

    uint64_t raw();  // full-range 64-bit draw

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derive the substream for (seed, label). Convenience factory mirroring the
/// stream constructor; labels are free-form, e.g. "channel/comm/draw=17".
RngStream rng_substream(uint64_t seed, std::string_view label);

}  // namespace iscc
