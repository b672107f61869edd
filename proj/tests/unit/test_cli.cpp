#include <gridstab/csv.hpp>
#include <gridstab_cli/cli.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace gridstab;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    CliResult r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        root_ = fs::temp_directory_path() /
                ("gridstab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    std::string path(const std::string& name) const { return (root_ / name).string(); }

    fs::path root_;
};

}  // namespace

TEST_F(CliTest, GenerateIsDeterministic)
{
    ASSERT_EQ(run({"generate", "--n", "20", "--count", "3", "--seed", "4", "--out", path("a")}).code, cli::kOk);
    ASSERT_EQ(run({"generate", "--n", "20", "--count", "3", "--seed", "4", "--out", path("b")}).code, cli::kOk);
    for (int k = 0; k < 3; ++k) {
        const std::string name = "grid_" + std::to_string(k) + ".json";
        EXPECT_EQ(read_file(path("a/" + name)), read_file(path("b/" + name)));
    }
    EXPECT_NE(read_file(path("a/grid_0.json")), read_file(path("a/grid_1.json")));
    EXPECT_TRUE(fs::exists(path("a/generate.conf")));
}

TEST_F(CliTest, OddNodeCountIsGridInvalid)
{
    EXPECT_EQ(run({"generate", "--n", "21", "--count", "1", "--out", path("g")}).code, cli::kGridInvalid);
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"generate", "--count", "1"}).code, cli::kUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run({"generate", "--n", "x", "--out", path("g")}).code, cli::kUsage);
}

TEST_F(CliTest, HelpExitsCleanly)
{
    const CliResult r = run({"estimate", "--help"});
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_NE(r.out.find("--trials"), std::string::npos);
}

TEST_F(CliTest, ZeroTrialsRejected)
{
    ASSERT_EQ(run({"generate", "--n", "6", "--count", "1", "--out", path("g")}).code, cli::kOk);
    EXPECT_EQ(run({"estimate", "--grid", path("g/grid_0.json"), "--trials", "0", "--out", path("e")}).code,
              cli::kUsage);
}

TEST_F(CliTest, InvalidParameterIsConfigError)
{
    EXPECT_EQ(run({"generate", "--n", "20", "--p", "1.5", "--out", path("g")}).code, cli::kConfig);
}

TEST_F(CliTest, EstimateIndependentOfWorkers)
{
    ASSERT_EQ(run({"generate", "--n", "8", "--count", "2", "--seed", "1", "--out", path("g")}).code, cli::kOk);
    const std::vector<std::string> common{"estimate", "--grid", path("g/grid_0.json"), "--grid", path("g/grid_1.json"),
                                          "--trials", "8", "--t-end", "100", "--seed", "3", "--quiet"};
    auto one = common;
    one.insert(one.end(), {"--workers", "1", "--out", path("w1")});
    auto four = common;
    four.insert(four.end(), {"--workers", "4", "--out", path("w4")});
    ASSERT_EQ(run(one).code, cli::kOk);
    ASSERT_EQ(run(four).code, cli::kOk);
    for (const char* name : {"stats_grid_0.csv", "stats_grid_1.csv"}) {
        EXPECT_EQ(read_file(path(std::string("w1/") + name)), read_file(path(std::string("w4/") + name)));
    }
}

TEST_F(CliTest, ExistingOutputsNeedForce)
{
    const std::vector<std::string> args{"generate", "--n", "6", "--count", "1", "--out", path("g")};
    ASSERT_EQ(run(args).code, cli::kOk);
    EXPECT_EQ(run(args).code, cli::kExists);
    auto forced = args;
    forced.push_back("--force");
    EXPECT_EQ(run(forced).code, cli::kOk);
}

TEST_F(CliTest, ConfigFileWithCommandLineOverride)
{
    write_file_atomic(path("gen.conf"), "# grids\nn = 10\ncount = 2\nseed = 5\n");
    ASSERT_EQ(run({"generate", "--config", path("gen.conf"), "--out", path("a")}).code, cli::kOk);
    ASSERT_EQ(run({"generate", "--config", path("gen.conf"), "--n", "12", "--out", path("b")}).code, cli::kOk);
    EXPECT_NE(read_file(path("a/generate.conf")).find("n=10"), std::string::npos);
    EXPECT_NE(read_file(path("b/generate.conf")).find("n=12"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("a/grid_1.json")));
    EXPECT_FALSE(fs::exists(path("a/grid_2.json")));
    EXPECT_NE(read_file(path("a/grid_0.json")).find("\"n\":10"), std::string::npos);
}

TEST_F(CliTest, BrokenConfigFileIsUsageError)
{
    write_file_atomic(path("bad.conf"), "n 10\n");
    EXPECT_EQ(run({"generate", "--config", path("bad.conf"), "--out", path("a")}).code, cli::kUsage);
    EXPECT_EQ(run({"generate", "--config", path("missing.conf"), "--out", path("a")}).code, cli::kUsage);
}

TEST_F(CliTest, DatasetTrainEvaluateReport)
{
    const std::string data = path("data");
    ASSERT_EQ(run({"build-dataset", "--out", data, "--count", "10", "--n", "6", "--trials", "3", "--t-end", "20",
                   "--seed", "2", "--workers", "1"})
                  .code,
              cli::kOk);
    ASSERT_TRUE(fs::exists(data + "/manifest.json"));

    ASSERT_EQ(run({"train", "--dataset", data, "--model", "linreg", "--out", path("lin.ckpt")}).code, cli::kOk);
    ASSERT_EQ(run({"train", "--dataset", data, "--model", "gcn", "--hidden", "4,4", "--epochs", "5", "--out",
                   path("gcn.ckpt")})
                  .code,
              cli::kOk);
    EXPECT_TRUE(fs::exists(path("gcn.ckpt.history.csv")));
    EXPECT_EQ(run({"train", "--dataset", data, "--model", "linreg", "--out", path("lin.ckpt")}).code, cli::kExists);
    EXPECT_EQ(run({"train", "--dataset", data, "--model", "linreg", "--target", "tm", "--out", path("x.ckpt")}).code,
              cli::kConfig);

    ASSERT_EQ(run({"evaluate", "--model", path("gcn.ckpt"), "--dataset", data, "--split", "test", "--out",
                   path("eval")})
                  .code,
              cli::kOk);
    EXPECT_NE(read_file(path("eval/report.json")).find("\"r2\""), std::string::npos);
    EXPECT_EQ(read_csv(path("eval/predictions.csv")).rows.size(), 2u * 6u);

    ASSERT_EQ(run({"evaluate", "--model", path("lin.ckpt"), "--grid", data + "/grid_0.json", "--targets",
                   data + "/targets_0.csv", "--out", path("eval_grid")})
                  .code,
              cli::kOk);

    ASSERT_EQ(run({"report", "--dataset", data, "--eval", path("eval/report.json"), "--out", path("report")}).code,
              cli::kOk);
    for (const char* f : {"hist_snbs.csv", "hist_mfd.csv", "tm_share.csv", "dataset_summary.csv",
                          "metrics_summary.csv"}) {
        EXPECT_TRUE(fs::exists(path(std::string("report/") + f))) << f;
    }
}

TEST_F(CliTest, BuildDatasetRefusesOtherConfig)
{
    const std::string data = path("data");
    ASSERT_EQ(run({"build-dataset", "--out", data, "--count", "2", "--n", "6", "--trials", "2", "--t-end", "10"}).code,
              cli::kOk);
    EXPECT_EQ(run({"build-dataset", "--out", data, "--count", "2", "--n", "6", "--trials", "3", "--t-end", "10"}).code,
              cli::kConfig);
    EXPECT_EQ(run({"build-dataset", "--out", data, "--count", "2", "--n", "6", "--trials", "3", "--t-end", "10",
                   "--force"})
                  .code,
              cli::kOk);
}

TEST_F(CliTest, MissingDatasetIsUsageError)
{
    EXPECT_EQ(run({"train", "--dataset", path("nope"), "--out", path("m.ckpt")}).code, cli::kUsage);
}
