#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridstab::ml {

/// Mean squared error. Throws DimensionError on length mismatch and
/// ConfigError for empty input.
double mse(std::span<const double> prediction, std::span<const double> target);

/// 1 - mse(f, y) / mse(mean(y), y), the mean taken over the evaluated
/// targets themselves. NaN when the targets are constant.
double r2_score(std::span<const double> prediction, std::span<const double> target);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
};

/// Labels are read as positive when >= 0.5.
Confusion confusion(std::span<const double> predicted_labels, std::span<const double> true_labels);

/// tp / (tp + fp); 0 when nothing is predicted positive.
double precision(const Confusion& c);
/// tp / (tp + fn); 0 when there are no positives.
double recall(const Confusion& c);
/// (1 + b^2) P R / (b^2 P + R); 0 when P = R = 0.
double f_beta(const Confusion& c, double beta = 2.0);

/// 1 where the predicted mfd is >= beta. Throws ConfigError for beta <= 0.
std::vector<double> threshold_regression_to_tm(std::span<const double> predicted_mfd, double beta);

struct NodePrediction {
    std::uint64_t grid_id = 0;
    std::size_t node = 0;
    double target = 0.0;
    double prediction = 0.0;
};

struct EvalReport {
    std::string target;
    std::string model;
    std::size_t grids = 0;
    std::size_t nodes = 0;
    double mse = 0.0;
    double r2 = 0.0;
    // Troublemaker detection: direct for classifiers, by thresholding the
    // predicted mfd at beta for mfd regression; absent for snbs.
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_beta;
    std::optional<Confusion> confusion;
    std::vector<NodePrediction> predictions;
};

std::string report_to_json(const EvalReport& report);
/// grid_id,node,target,prediction
std::string predictions_to_csv(std::span<const NodePrediction> predictions);

}  // namespace gridstab::ml
