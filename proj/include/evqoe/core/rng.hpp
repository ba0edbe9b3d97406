#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace evqoe {

/// splitmix64 finalizer; the counter-based seed derivation used everywhere a
/// child stream is needed: derive_seed(master, i) for stream i.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seedable random source. The engine is std::mt19937_64 (bit-exact across
/// standard libraries); all variate transforms are implemented here so that
/// streams do not depend on library-specific distribution code.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent child stream keyed by `stream`.
    static Rng derived(std::uint64_t master, std::uint64_t stream) {
        return Rng(derive_seed(master, stream));
    }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    double exponential(double rate);
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace evqoe
