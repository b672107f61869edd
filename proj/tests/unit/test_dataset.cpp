#include <gridstab/csv.hpp>
#include <gridstab/dataset.hpp>
#include <gridstab/error.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <numeric>
#include <stdexcept>

using namespace gridstab;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> iota_ids(std::size_t n)
{
    std::vector<std::uint64_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

DatasetConfig small_config()
{
    DatasetConfig cfg;
    cfg.count = 4;
    cfg.n_nodes = 6;
    cfg.trials = 6;
    cfg.integrator.t_end = 60.0;
    cfg.master_seed = 77;
    cfg.split_seed = 5;
    return cfg;
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("gridstab_" + name))
    {
        fs::remove_all(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

BuildOptions quiet(unsigned workers = 1)
{
    BuildOptions o;
    o.workers = workers;
    o.log = [](const std::string&) {};
    return o;
}

void expect_same_files(const fs::path& a, const fs::path& b)
{
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) {
        names.push_back(e.path().filename().string());
    }
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) {
        ++count_b;
    }
    EXPECT_EQ(names.size(), count_b);
    for (const auto& name : names) {
        EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
    }
}

}  // namespace

TEST(Split, HundredGrids)
{
    const auto s = split_dataset(iota_ids(100), 3);
    EXPECT_EQ(s.train.size(), 70u);
    EXPECT_EQ(s.validation.size(), 15u);
    EXPECT_EQ(s.test.size(), 15u);
}

TEST(Split, TenGrids)
{
    const auto s = split_dataset(iota_ids(10), 3);
    EXPECT_EQ(s.train.size(), 7u);
    EXPECT_EQ(s.validation.size(), 1u);
    EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, PartitionIsDisjointAndComplete)
{
    for (std::size_t n : {10u, 11u, 37u, 200u}) {
        const auto s = split_dataset(iota_ids(n), n);
        std::vector<std::uint64_t> all;
        all.insert(all.end(), s.train.begin(), s.train.end());
        all.insert(all.end(), s.validation.begin(), s.validation.end());
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        EXPECT_EQ(all, iota_ids(n));
        EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    }
}

TEST(Split, IndependentOfInputOrder)
{
    auto ids = iota_ids(50);
    const auto a = split_dataset(ids, 9);
    std::reverse(ids.begin(), ids.end());
    EXPECT_EQ(split_dataset(ids, 9), a);
    EXPECT_NE(split_dataset(ids, 10), a);
}

TEST(Split, RejectsTooFewOrDuplicates)
{
    EXPECT_THROW(split_dataset(iota_ids(9), 1), ConfigError);
    auto ids = iota_ids(12);
    ids[3] = 4;
    EXPECT_THROW(split_dataset(ids, 1), ConfigError);
}

TEST(Manifest, JsonRoundTrip)
{
    DatasetManifest m;
    m.config = small_config();
    m.config.growth.p = 0.25;
    m.config.tm.gamma = 0.01;
    m.records = {{0, 11, 12, 0}, {1, 13, 14, 2}};
    m.split.train = {0};
    m.split.test = {1};
    m.complete = true;
    EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
}

TEST(Manifest, MalformedJsonIsSchemaError)
{
    EXPECT_THROW(manifest_from_json("{\"format\": 1"), SchemaError);
    EXPECT_THROW(manifest_from_json("[]"), SchemaError);
}

TEST(Targets, CsvRoundTrip)
{
    NodeStats s;
    s.node = 0;
    s.n_trials = 4;
    s.n_stable = 3;
    s.snbs = 0.75;
    s.snbs_se = 0.21650635094610965;
    s.n_tm_trials = 2;
    s.n_within_bound = 1;
    s.mfd_max = 16.5;
    s.cp_lower = 0.0005;
    s.tm = true;
    TempDir dir("targets");
    fs::create_directories(dir.path());
    const std::vector<NodeStats> stats{s};
    write_file_atomic(dir.path() / "t.csv", targets_to_csv(stats));
    EXPECT_EQ(read_targets(dir.path() / "t.csv"), stats);
}

TEST(Record, ValidateCatchesInconsistentLabels)
{
    DatasetRecord r;
    r.grid = PowerGrid(2, {{0, 1}}, {1.0, -1.0});
    NodeStats s;
    s.n_trials = 10;
    s.n_stable = 10;
    s.snbs = 1.0;
    s.n_tm_trials = 1000;
    s.n_within_bound = 1000;
    s.tm = true;  // 0.001^(1/1000) < 1 - 0.005
    r.stats = {s, s};
    r.stats[1].node = 1;
    EXPECT_NO_THROW(r.validate(TmConfig{}));
    r.stats[0].tm = false;
    EXPECT_THROW(r.validate(TmConfig{}), SchemaError);
    r.stats[0].tm = true;
    r.stats[0].snbs = 1.5;
    EXPECT_THROW(r.validate(TmConfig{}), SchemaError);
    r.stats.pop_back();
    EXPECT_THROW(r.validate(TmConfig{}), SchemaError);
}

TEST(Build, DeterministicAcrossRunsAndWorkers)
{
    TempDir a("build_a");
    TempDir b("build_b");
    const auto ma = build_dataset(a.path(), small_config(), quiet(1));
    const auto mb = build_dataset(b.path(), small_config(), quiet(3));
    EXPECT_EQ(ma, mb);
    EXPECT_TRUE(ma.complete);
    EXPECT_EQ(ma.records.size(), 4u);
    EXPECT_TRUE(ma.split.train.empty());
    expect_same_files(a.path(), b.path());
    for (const auto& rec : load_records(a.path(), iota_ids(4))) {
        EXPECT_EQ(rec.grid.size(), 6u);
        EXPECT_NO_THROW(rec.validate(small_config().tm));
    }
}

TEST(Build, CompletesWithSplitForTenGrids)
{
    TempDir dir("build_split");
    DatasetConfig cfg = small_config();
    cfg.count = 10;
    cfg.trials = 2;
    cfg.integrator.t_end = 20.0;
    const auto m = build_dataset(dir.path(), cfg, quiet());
    EXPECT_TRUE(m.complete);
    EXPECT_EQ(m.split, split_dataset(iota_ids(10), cfg.split_seed));
    EXPECT_EQ(load_manifest(dir.path()), m);
}

TEST(Build, ResumesAfterInterruption)
{
    TempDir full("resume_full");
    TempDir part("resume_part");
    build_dataset(full.path(), small_config(), quiet());

    BuildOptions interrupting = quiet();
    std::atomic<int> seen{0};
    interrupting.on_trial = [&](const TrialOutcome&) {
        // Two grids' worth of trials (6 nodes x 6 trials plus supplements), then stop.
        if (++seen > 90) {
            throw std::runtime_error("interrupted");
        }
    };
    EXPECT_THROW(build_dataset(part.path(), small_config(), interrupting), std::runtime_error);
    const auto partial = load_manifest(part.path());
    EXPECT_GE(partial.records.size(), 1u);
    EXPECT_LT(partial.records.size(), 4u);

    build_dataset(part.path(), small_config(), quiet());
    expect_same_files(full.path(), part.path());
}

TEST(Build, RefusesDifferentConfiguration)
{
    TempDir dir("build_mismatch");
    DatasetConfig cfg = small_config();
    cfg.count = 1;
    build_dataset(dir.path(), cfg, quiet());
    cfg.trials = 7;
    EXPECT_THROW(build_dataset(dir.path(), cfg, quiet()), ConfigError);
}
