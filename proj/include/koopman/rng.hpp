// Counter-based 64-bit random number generation.
#pragma once

#include <cstdint>
#include <limits>

namespace koopman {

/// SplitMix64 finalizer; a bijective 64-bit mixing function.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of the independent stream `stream` derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/**
 * Counter-based SplitMix64 generator.
 *
 * The n-th output is splitmix64(key + n * golden_gamma), so any position of
 * any stream is addressable without replaying the stream. Satisfies
 * UniformRandomBitGenerator and can drive the <random> distributions.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Standard normal draw (Marsaglia polar method, cached pair).
    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace koopman
