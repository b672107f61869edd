#pragma once

#include "gridstab/dataset.hpp"
#include "gridstab/features.hpp"
#include "gridstab/ml/metrics.hpp"
#include "gridstab/ml/model.hpp"
#include "gridstab/ml/train.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gridstab::ml {

enum class Target { snbs, mfd, tm };

std::string_view to_string(Target target);
Target parse_target(std::string_view text);

/// Nodal target values: snbs, mfd_max, or tm as 0/1.
std::vector<double> target_values(std::span<const NodeStats> stats, Target target);

/// Model plus everything needed to turn a grid into model inputs.
///
/// linreg/logreg/mlp read the six standardized hand-crafted features;
/// gcn reads two channels per node, the injection and a constant 1.
struct Predictor {
    Model model;
    Target target = Target::snbs;
    std::optional<FeatureScaler> scaler;  // feature models only
    std::vector<Eigen::Index> hidden;
    Activation hidden_activation = Activation::relu;
    TrainConfig train;
    double tm_beta = 15.0;
    double decision_threshold = 0.5;  // on predicted probability, tm classifiers
};

struct PredictorSpec {
    ModelKind kind = ModelKind::linreg;
    Target target = Target::snbs;
    std::vector<Eigen::Index> hidden;
    Activation hidden_activation = Activation::relu;
    double tm_beta = 15.0;
    double decision_threshold = 0.5;
};

/// Head and loss for a kind/target pair: snbs -> sigmoid, mfd -> softplus,
/// tm -> logit with weighted cross-entropy; linreg keeps an identity head.
/// Throws ConfigError for linreg on tm and logreg on regression targets.
Head head_for(ModelKind kind, Target target);
Loss loss_for(Target target);

/// Builds the model inputs of one grid. Feature models need a scaler.
GraphSample make_sample(const Predictor& predictor, const PowerGrid& grid, std::uint64_t grid_id,
                        std::span<const double> targets, const FeatureScaler* scaler);

struct TrainOutcome {
    Predictor predictor;
    TrainHistory history;
};

/// Trains on the training split of a dataset, monitoring the validation
/// split. Features are standardized with training-split statistics.
TrainOutcome train_predictor(const std::filesystem::path& dataset_dir, const PredictorSpec& spec,
                             const TrainConfig& cfg);

/// Same, on already loaded records.
TrainOutcome train_predictor(std::span<const DatasetRecord> train, std::span<const DatasetRecord> validation,
                             const PredictorSpec& spec, const TrainConfig& cfg);

/// Evaluates on a collection of grids with targets. Feature models reuse
/// the training scaler when the collection has the training grid size and
/// otherwise standardize with the collection's own statistics (node-wise
/// for several equally sized grids, pooled over nodes otherwise).
/// Throws ConfigError for an empty collection.
EvalReport evaluate_predictor(const Predictor& predictor, std::span<const DatasetRecord> records);

}  // namespace gridstab::ml
