#include <gridstab/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <vector>

using gridstab::rng::CounterStream;
using gridstab::rng::philox4x32;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswerZero)
{
    const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes)
{
    const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits)
{
    const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterStream, SameSeedSameSequence)
{
    CounterStream a(42, 3);
    CounterStream b(42, 3);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a(), b());
    }
}

TEST(CounterStream, StreamsDiffer)
{
    CounterStream a(42, 0);
    CounterStream b(42, 1);
    int equal = 0;
    for (int i = 0; i < 100; ++i) {
        equal += a() == b() ? 1 : 0;
    }
    EXPECT_EQ(equal, 0);
}

TEST(CounterStream, UniformInUnitInterval)
{
    CounterStream s(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(CounterStream, DegenerateIntervalIsExact)
{
    CounterStream s(7);
    EXPECT_EQ(s.uniform(1.25, 1.25), 1.25);
}

TEST(CounterStream, BelowIsInRangeAndCoversAllValues)
{
    CounterStream s(11);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = s.below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (const int c : counts) {
        EXPECT_NEAR(c, 10000, 500);
    }
    EXPECT_EQ(s.below(1), 0u);
    EXPECT_EQ(s.below(0), 0u);
}

TEST(CounterStream, BelowHandlesHugeBounds)
{
    CounterStream s(5);
    const std::uint64_t bound = (std::uint64_t{1} << 63) + 12345;
    for (int i = 0; i < 1000; ++i) {
        EXPECT_LT(s.below(bound), bound);
    }
}

TEST(DeriveSeed, DistinctTagsGiveDistinctSeeds)
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t tag = 0; tag < 1000; ++tag) {
        seen.insert(gridstab::rng::derive_seed(99, tag));
    }
    EXPECT_EQ(seen.size(), 1000u);
}

TEST(CounterStream, ShuffleIsAPermutation)
{
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    CounterStream s(3);
    std::shuffle(v.begin(), v.end(), s);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(sorted[i], i);
    }
}
