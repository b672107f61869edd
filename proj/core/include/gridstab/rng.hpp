#pragma once

#include <array>
#include <cstdint>

namespace gridstab::rng {

/// Philox4x32-10 block function (Salmon et al., Random123). Pure: the
/// output depends only on (counter, key), which makes every random draw
/// addressable by its logical coordinates instead of by draw order.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32(Counter counter, Key key) noexcept;

constexpr Key key_from_seed(std::uint64_t seed) noexcept
{
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Maps 64 random bits to a double in [0, 1) with 53 bits of resolution.
constexpr double to_unit(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// SplitMix64 finalizer; used to fold several identifiers into one seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent 64-bit seed from a parent seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept
{
    return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

/// Sequential generator in counter mode: draw k returns block k of the
/// Philox stream under a fixed key. Satisfies UniformRandomBitGenerator so
/// it can drive std::shuffle, but the helpers below are preferred because
/// std distributions are not bit-identical across standard libraries.
class CounterStream {
public:
    using result_type = std::uint64_t;

    explicit CounterStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(key_from_seed(seed)), stream_(stream)
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept;

    /// Uniform double in [0, 1).
    double uniform() noexcept { return to_unit((*this)()); }

    /// Uniform double in [lo, hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;
};

}  // namespace gridstab::rng
