#pragma once

#include <gridstab/dataset.hpp>
#include <gridstab/dynamics.hpp>
#include <gridstab/ml/pipeline.hpp>
#include <gridstab/stability.hpp>
#include <gridstab/topology.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gridstab::cli {

namespace fs = std::filesystem;

struct GenerateOptions {
    GrowthParams growth;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    fs::path out;
    bool force = false;
};

struct EstimateOptions {
    std::vector<fs::path> grids;
    fs::path out;
    std::size_t trials = 500;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    SwingParams swing;
    IntegratorConfig integrator;
    TmConfig tm;
    bool no_certificate = false;
    bool quiet = false;
    bool force = false;
    std::string trajectory;  // "NODE:TRIAL"
};

struct BuildDatasetOptions {
    DatasetConfig dataset;
    fs::path out;
    unsigned workers = 0;
    bool no_certificate = false;
    bool trial_log = false;
    bool force = false;
};

struct TrainOptions {
    fs::path dataset;
    fs::path out;
    std::string model = "linreg";
    std::string target = "snbs";
    std::string hidden;
    std::string activation = "relu";
    ml::TrainConfig train;
    bool sgd = false;  // linreg: use SGD instead of the closed form
    double decision_threshold = 0.5;
    bool force = false;
};

struct EvaluateOptions {
    fs::path model;
    fs::path dataset;
    std::string split = "test";
    std::vector<fs::path> grids;
    std::vector<fs::path> targets;
    fs::path out;
    bool force = false;
};

struct ReportOptions {
    fs::path dataset;
    std::size_t bins = 20;
    std::vector<fs::path> evaluations;
    fs::path out;
    bool force = false;
};

// Each returns a process exit code; `resolved_config` is the flat
// key=value dump written next to the outputs.
int cmd_generate(const GenerateOptions& o, const std::string& resolved_config, std::ostream& err);
int cmd_estimate(const EstimateOptions& o, const std::string& resolved_config, std::ostream& err);
int cmd_build_dataset(const BuildDatasetOptions& o, const std::string& resolved_config, std::ostream& err);
int cmd_train(const TrainOptions& o, const std::string& resolved_config, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& o, const std::string& resolved_config, std::ostream& err);
int cmd_report(const ReportOptions& o, const std::string& resolved_config, std::ostream& err);

}  // namespace gridstab::cli
