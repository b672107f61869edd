#include <gridstab/error.hpp>
#include <gridstab/topology.hpp>

#include <gtest/gtest.h>

#include <numeric>

using namespace gridstab;

namespace {

GrowthParams params(std::size_t n, std::uint64_t seed)
{
    GrowthParams p;
    p.n = n;
    p.seed = seed;
    return p;
}

}  // namespace

TEST(Topology, ConnectedWithRequestedSize)
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const PowerGrid g = generate_topology(params(20, seed));
        ASSERT_EQ(g.size(), 20u);
        ASSERT_TRUE(g.is_connected()) << "seed " << seed;
        ASSERT_GE(g.edge_count(), 19u);
    }
}

TEST(Topology, DeterministicPerSeed)
{
    EXPECT_EQ(generate_topology(params(50, 3)), generate_topology(params(50, 3)));
    EXPECT_FALSE(generate_topology(params(50, 3)) == generate_topology(params(50, 4)));
}

TEST(Topology, LargerInitialNetwork)
{
    GrowthParams p = params(30, 1);
    p.n0 = 10;
    const PowerGrid g = generate_topology(p);
    EXPECT_EQ(g.size(), 30u);
    EXPECT_TRUE(g.is_connected());
}

TEST(Topology, TreeWhenNoRedundancy)
{
    GrowthParams p = params(40, 2);
    p.p = 0.0;
    p.q = 0.0;
    const PowerGrid g = generate_topology(p);
    EXPECT_EQ(g.edge_count(), 39u);
    EXPECT_TRUE(g.is_connected());
}

TEST(Topology, MeanDegreeNearTwoPointEight)
{
    double sum = 0.0;
    const int count = 100;
    for (int k = 0; k < count; ++k) {
        const PowerGrid g = generate_topology(params(100, 1000 + k));
        sum += 2.0 * static_cast<double>(g.edge_count()) / 100.0;
    }
    EXPECT_NEAR(sum / count, 2.8, 0.2);
}

TEST(Topology, InvalidParameters)
{
    GrowthParams p = params(20, 0);
    p.p = 1.5;
    EXPECT_THROW(generate_topology(p), ConfigError);
    p = params(20, 0);
    p.n0 = 0;
    EXPECT_THROW(generate_topology(p), ConfigError);
    p = params(5, 0);
    p.n0 = 6;
    EXPECT_THROW(generate_topology(p), ConfigError);
}

TEST(Injections, BalancedAndValid)
{
    const PowerGrid g = assign_injections(generate_topology(params(20, 5)), 9);
    EXPECT_NO_THROW(g.validate());
    const auto inj = g.injections();
    EXPECT_EQ(std::accumulate(inj.begin(), inj.end(), 0.0), 0.0);
    EXPECT_EQ(std::count(inj.begin(), inj.end(), 1.0), 10);
}

TEST(Injections, OddNodeCountIsABalanceError)
{
    EXPECT_THROW(assign_injections(generate_topology(params(21, 5)), 9), BalanceError);
}

TEST(Injections, EveryNodeIsSometimesASource)
{
    const PowerGrid t = generate_topology(params(10, 5));
    std::vector<int> sources(10, 0);
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        const PowerGrid g = assign_injections(t, seed);
        for (std::size_t i = 0; i < 10; ++i) {
            sources[i] += g.injections()[i] > 0 ? 1 : 0;
        }
    }
    for (const int s : sources) {
        EXPECT_NEAR(s, 200, 45);
    }
}
