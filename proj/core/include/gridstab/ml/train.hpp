#pragma once

#include "gridstab/ml/model.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <span>
#include <vector>

namespace gridstab::ml {

enum class Loss { mse, weighted_bce };

/// One grid: node inputs, nodal targets, and for graph models the
/// normalized adjacency.
struct GraphSample {
    std::uint64_t grid_id = 0;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::SparseMatrix<double> adjacency;
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.0;
    std::size_t batch_size = 8;  // grids per step
    std::size_t epochs = 500;
    Loss loss = Loss::mse;
    /// Weight of positive labels in the cross-entropy; 0 means
    /// #negatives / #positives of the training set.
    double pos_weight = 0.0;
    std::size_t patience = 50;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    /// linreg only: solve the normal equations instead of running SGD.
    bool closed_form = false;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;  // after each epoch, over the full training set
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;  // 1-based; 0 keeps the initial parameters
    double best_val_loss = 0.0;
    bool stopped_early = false;
    double pos_weight = 1.0;
};

/// Raw (pre-head) outputs for one grid, one row per node.
Eigen::MatrixXd raw_output(const Model& model, const GraphSample& sample);

/// Head-applied nodal predictions (probabilities for logit heads).
Eigen::VectorXd predict(const Model& model, const GraphSample& sample);

/// Mean loss over all nodes of the given grids.
double dataset_loss(const Model& model, std::span<const GraphSample> samples, Loss loss, double pos_weight);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Mean loss over all nodes of the selected grids and its exact gradient.
/// Per-grid gradients are summed in index order, so the result does not
/// depend on the worker count.
LossGradient loss_and_gradient(const Model& model, std::span<const GraphSample> samples,
                               std::span<const std::size_t> batch, Loss loss, double pos_weight,
                               unsigned workers = 1);

/// #negatives / #positives over the nodal labels (1 when either is zero).
double balanced_pos_weight(std::span<const GraphSample> samples);

/// Mini-batch SGD with early stopping on the validation loss; the model
/// ends with the parameters of the best validation epoch. Throws
/// TrainingError when the loss becomes nonfinite.
TrainHistory fit(Model& model, std::span<const GraphSample> train, std::span<const GraphSample> validation,
                 const TrainConfig& cfg);

/// Least-squares fit of a linreg model via the normal equations.
void fit_linear_closed_form(Model& model, std::span<const GraphSample> train);

}  // namespace gridstab::ml
