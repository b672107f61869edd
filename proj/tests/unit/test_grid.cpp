#include <gridstab/error.hpp>
#include <gridstab/grid.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace gridstab;

TEST(PowerGrid, NormalizesAndSortsEdges)
{
    const PowerGrid g(4, {{2, 1}, {0, 3}, {1, 0}});
    const std::vector<Edge> expected{{0, 1}, {0, 3}, {1, 2}};
    EXPECT_TRUE(std::equal(g.edges().begin(), g.edges().end(), expected.begin(), expected.end()));
    EXPECT_EQ(g.degree(0), 2u);
    EXPECT_EQ(g.degree(2), 1u);
    EXPECT_TRUE(g.has_edge(3, 0));
    EXPECT_FALSE(g.has_edge(2, 3));
    const auto nb = g.neighbors(0);
    EXPECT_EQ(std::vector<std::size_t>(nb.begin(), nb.end()), (std::vector<std::size_t>{1, 3}));
}

TEST(PowerGrid, RejectsStructuralErrors)
{
    EXPECT_THROW(PowerGrid(3, {{0, 3}}), SchemaError);
    EXPECT_THROW(PowerGrid(3, {{1, 1}}), SchemaError);
    EXPECT_THROW(PowerGrid(3, {{0, 1}, {1, 0}}), SchemaError);
    EXPECT_THROW(PowerGrid(3, {{0, 1}}, {1.0, -1.0}), DimensionError);
}

TEST(PowerGrid, ValidateChecksDomainInvariants)
{
    EXPECT_NO_THROW(PowerGrid(2, {{0, 1}}, {1.0, -1.0}).validate());
    EXPECT_THROW(PowerGrid(4, {{0, 1}, {2, 3}}, {1, -1, 1, -1}).validate(), ConnectivityError);
    EXPECT_THROW(PowerGrid(2, {{0, 1}}, {1.0, 1.0}).validate(), BalanceError);
    EXPECT_THROW(PowerGrid(2, {{0, 1}}, {0.5, -0.5}).validate(), SchemaError);
}

TEST(PowerGrid, JsonRoundTrip)
{
    const PowerGrid g(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {1, -1, -1, 1});
    EXPECT_EQ(grid_from_json(grid_to_json(g)), g);
}

TEST(PowerGrid, ImportRejectsUnbalancedFile)
{
    const auto path = std::filesystem::temp_directory_path() / "gridstab_unbalanced.json";
    {
        std::ofstream out(path);
        out << R"({"n": 2, "edges": [[0, 1]], "injections": [1, 1]})";
    }
    EXPECT_THROW(import_grid(path), BalanceError);
    std::filesystem::remove(path);
}

TEST(PowerGrid, ImportRejectsMalformedFile)
{
    const auto path = std::filesystem::temp_directory_path() / "gridstab_malformed.json";
    {
        std::ofstream out(path);
        out << R"({"n": 2, "edges": [[0, 1, 2]]})";
    }
    EXPECT_THROW(import_grid(path), SchemaError);
    std::filesystem::remove(path);
    EXPECT_THROW(import_grid(path), IoError);
}

TEST(PowerGrid, WriteImportRoundTrip)
{
    const PowerGrid g(4, {{0, 1}, {1, 2}, {2, 3}}, {1, -1, 1, -1});
    const auto path = std::filesystem::temp_directory_path() / "gridstab_roundtrip.json";
    write_grid(g, path);
    EXPECT_EQ(import_grid(path), g);
    std::filesystem::remove(path);
}

TEST(PowerGrid, PermutedRelabelsNodes)
{
    const PowerGrid g(3, {{0, 1}, {1, 2}}, {1, 0, -1});
    const std::vector<std::size_t> perm{2, 0, 1};  // new node i is old node perm[i]
    const PowerGrid p = g.permuted(perm);
    EXPECT_EQ(p.injections()[0], -1.0);
    EXPECT_EQ(p.injections()[1], 1.0);
    EXPECT_TRUE(p.has_edge(1, 2));  // old (0, 1)
    EXPECT_TRUE(p.has_edge(2, 0));  // old (1, 2)
    EXPECT_FALSE(p.has_edge(0, 1));
}

TEST(PowerGrid, BfsDistances)
{
    const PowerGrid g(5, {{0, 1}, {1, 2}, {2, 3}});
    const auto d = bfs_distances(g, 0);
    EXPECT_EQ(d[3], 3u);
    EXPECT_EQ(d[4], SIZE_MAX);
    EXPECT_FALSE(g.is_connected());
}
