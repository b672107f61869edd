#pragma once

#include "gridstab/dynamics.hpp"
#include "gridstab/grid.hpp"
#include "gridstab/stability.hpp"
#include "gridstab/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gridstab {

inline constexpr std::string_view kGeneratorVersion = "gridstab 0.1.0";

/// Everything needed to re-derive a dataset bit for bit.
struct DatasetConfig {
    std::size_t count = 200;
    std::size_t n_nodes = 20;
    GrowthParams growth;  // n and seed are overridden per grid
    SwingParams swing;
    IntegratorConfig integrator;
    TmConfig tm;
    std::size_t trials = 500;
    std::uint64_t master_seed = 0;
    std::uint64_t split_seed = 0;
    bool certified_exit = true;

    void validate() const;
    friend bool operator==(const DatasetConfig&, const DatasetConfig&);
};

struct SplitAssignment {
    std::vector<std::uint64_t> train;
    std::vector<std::uint64_t> validation;
    std::vector<std::uint64_t> test;

    friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

struct RecordEntry {
    std::uint64_t grid_id = 0;
    std::uint64_t topology_seed = 0;
    std::uint64_t injection_seed = 0;
    std::size_t attempt = 0;  // number of discarded candidates before this grid

    friend bool operator==(const RecordEntry&, const RecordEntry&) = default;
};

struct DatasetManifest {
    DatasetConfig config;
    std::string generator_version{kGeneratorVersion};
    std::vector<RecordEntry> records;
    SplitAssignment split;
    bool complete = false;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Grid plus nodal targets. snbs/mfd/tm are views of `stats`.
struct DatasetRecord {
    std::uint64_t grid_id = 0;
    PowerGrid grid;
    std::vector<NodeStats> stats;

    std::vector<double> snbs() const;
    std::vector<double> mfd() const;
    std::vector<double> tm() const;

    /// Throws SchemaError unless lengths match, snbs lies in [0, 1], counts
    /// are consistent and tm equals classify_tm of the stored counts.
    void validate(const TmConfig& tm_cfg) const;
};

std::string grid_file_name(std::uint64_t grid_id);
std::string targets_file_name(std::uint64_t grid_id);

/// Targets CSV: node, snbs, snbs_se, mfd, tm, n_trials, n_stable,
/// n_tm_trials, n_within_bound, cp_lower.
std::string targets_to_csv(std::span<const NodeStats> stats);

/// Reads a targets CSV or a per-grid estimate CSV (mfd_max column).
std::vector<NodeStats> read_targets(const std::filesystem::path& path);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);
DatasetManifest load_manifest(const std::filesystem::path& dir);

DatasetRecord load_record(const std::filesystem::path& dir, std::uint64_t grid_id);
std::vector<DatasetRecord> load_records(const std::filesystem::path& dir, std::span<const std::uint64_t> grid_ids);

/// 70:15:15 split by grid: ids are sorted, shuffled with the seed, then
/// train = round(0.7 n), validation = floor(0.15 n), test = remainder.
/// Each part is returned sorted. Throws ConfigError for fewer than 10 ids
/// or duplicates.
SplitAssignment split_dataset(std::vector<std::uint64_t> grid_ids, std::uint64_t seed);

struct BuildOptions {
    unsigned workers = 0;
    /// Progress and discard messages; defaults to standard error.
    std::function<void(const std::string&)> log;
    /// Forwarded to EstimationConfig::on_trial.
    std::function<void(const TrialOutcome&)> on_trial;
};

/// Builds (or resumes) a dataset in `dir`. Grid i is generated from seeds
/// derived from (master_seed, i, attempt); candidates without a stable
/// operating point are discarded and logged. Already finished grids are
/// kept. Throws ConfigError when `dir` holds a dataset with a different
/// configuration, IoError when it cannot be written.
DatasetManifest build_dataset(const std::filesystem::path& dir, const DatasetConfig& cfg,
                              const BuildOptions& options = {});

}  // namespace gridstab
