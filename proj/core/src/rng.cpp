#include "gridstab/rng.hpp"

#include <tuple>
#include <utility>

namespace gridstab::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

inline Counter round(Counter c, Key k) noexcept
{
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Counter philox4x32(Counter counter, Key key) noexcept
{
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        counter = round(counter, key);
    }
    return counter;
}

CounterStream::result_type CounterStream::operator()() noexcept
{
    if (buffered_ == 0) {
        const Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = philox4x32(ctr, key_);
        ++block_;
        buffered_ = 4;
    }
    const int at = 4 - buffered_;
    buffered_ -= 2;
    return (static_cast<std::uint64_t>(buffer_[at]) << 32) | buffer_[at + 1];
}

namespace {

// Full 128-bit product of two 64-bit values as (high, low).
std::pair<std::uint64_t, std::uint64_t> multiply_wide(std::uint64_t a, std::uint64_t b) noexcept
{
    const std::uint64_t a_lo = a & 0xffffffffULL;
    const std::uint64_t a_hi = a >> 32;
    const std::uint64_t b_lo = b & 0xffffffffULL;
    const std::uint64_t b_hi = b >> 32;
    const std::uint64_t ll = a_lo * b_lo;
    const std::uint64_t lh = a_lo * b_hi;
    const std::uint64_t hl = a_hi * b_lo;
    const std::uint64_t hh = a_hi * b_hi;
    const std::uint64_t mid = (ll >> 32) + (lh & 0xffffffffULL) + (hl & 0xffffffffULL);
    const std::uint64_t high = hh + (lh >> 32) + (hl >> 32) + (mid >> 32);
    const std::uint64_t low = (mid << 32) | (ll & 0xffffffffULL);
    return {high, low};
}

}  // namespace

std::uint64_t CounterStream::below(std::uint64_t bound) noexcept
{
    if (bound <= 1) {
        return 0;
    }
    auto [high, low] = multiply_wide((*this)(), bound);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            std::tie(high, low) = multiply_wide((*this)(), bound);
        }
    }
    return high;
}

}  // namespace gridstab::rng
