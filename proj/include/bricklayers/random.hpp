#pragma once

#include <cstdint>
#include <limits>

namespace brick {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for replica `k` of a run with master seed `master`:
///     derive_seed(m, k) = splitmix64(m ^ splitmix64(k + 0x632BE59BD9B4E019))
/// External tools can reproduce replica streams from this formula.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) noexcept
{
    return splitmix64(master ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
}

/// Hash of an ordered tuple of 64-bit words; used to key counter-based substreams.
constexpr std::uint64_t hash_words(std::uint64_t a, std::uint64_t b) noexcept
{
    return splitmix64(a ^ splitmix64(b ^ 0xD1B54A32D192ED03ULL));
}

/// Maps 64 random bits to the open interval (0, 1).
constexpr double unit_open(std::uint64_t bits) noexcept
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based uniform: the `counter`-th element of the stream keyed by `key`.
constexpr double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept
{
    return unit_open(splitmix64(key + counter * kGolden));
}

/// Sequential SplitMix64 engine satisfying UniformRandomBitGenerator.
class SplitMix64
{
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        state_ += kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw on (0, 1).
    constexpr double uniform() noexcept { return unit_open((*this)()); }

private:
    std::uint64_t state_;
};

} // namespace brick
