#pragma once

#include <cstdint>
#include <random>

namespace evosynth {

/// Deterministic random source. All randomness in the engine flows through
/// this wrapper; uint-to-double conversion is done by hand so that streams do
/// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool bernoulli(double p) { return next_double() < p; }

    /// Uniform integer in [0, n), n > 0. Rejection keeps it exactly uniform.
    uint64_t next_index(uint64_t n);

private:
    std::mt19937_64 gen_;
};

/// SplitMix64 finalizer.
uint64_t splitmix64(uint64_t x);

/// Seed for an independent stream derived from a master seed. Streams are
/// numbered; the mixing rule is fixed so runs are reproducible byte for byte.
uint64_t derive_seed(uint64_t master, uint64_t stream);

}  // namespace evosynth
