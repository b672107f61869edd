#pragma once

#include "gridstab/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridstab::ml {

enum class ModelKind { linreg, logreg, mlp, gcn };
enum class Activation { identity, relu, tanh, sigmoid, softplus };
/// Map from the last layer's raw output z to a prediction. `logit` heads
/// predict sigmoid(z) and are trained on z with a cross-entropy loss.
enum class Head { identity, sigmoid, softplus, logit };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Activation activation);
std::string_view to_string(Head head);
ModelKind parse_model_kind(std::string_view text);
Activation parse_activation(std::string_view text);
Head parse_head(std::string_view text);

/// Dense layer Z = S H W + 1 b^T followed by an elementwise activation,
/// where S is the identity for node-local models and the normalized
/// adjacency for graph convolutions. W is (in x out).
struct Layer {
    Eigen::MatrixXd weight;
    Eigen::RowVectorXd bias;
    Activation activation = Activation::identity;
};

struct Model {
    ModelKind kind = ModelKind::linreg;
    Head head = Head::identity;
    std::vector<Layer> layers;

    Eigen::Index input_dim() const;
    Eigen::Index output_dim() const;
    std::size_t parameter_count() const;

    /// Flattened parameters: per layer, W in column-major order then b.
    std::vector<double> parameters() const;
    /// Throws DimensionError on a length mismatch.
    void set_parameters(std::span<const double> values);

    /// Throws DimensionError unless consecutive layer shapes agree.
    void validate() const;
};

struct ModelSpec {
    ModelKind kind = ModelKind::linreg;
    Head head = Head::identity;
    Eigen::Index input_dim = 1;
    std::vector<Eigen::Index> hidden;  // ignored for linreg/logreg
    Activation hidden_activation = Activation::relu;
    std::uint64_t seed = 0;
};

/// Glorot-uniform weights drawn from a counter-based stream, zero biases,
/// one output unit with identity activation.
Model make_model(const ModelSpec& spec);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
Eigen::SparseMatrix<double> normalized_adjacency(const PowerGrid& grid);

/// Activations of one forward pass. pre[l] = S H_l W_l + 1 b_l^T,
/// propagated[l] = S H_l, outputs[l] = activation(pre[l]); outputs.back()
/// is the raw (pre-head) model output.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> propagated;
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> outputs;
};

/// Node-local forward pass (linreg, logreg, mlp). Throws DimensionError when
/// x has the wrong number of columns.
ForwardCache forward(const Model& model, const Eigen::MatrixXd& x);

/// Graph-convolution forward pass H_{l+1} = act(A_norm H_l W_l + b_l).
/// Throws DimensionError unless x has one row per node of the adjacency.
ForwardCache gcn_forward(const Model& model, const Eigen::SparseMatrix<double>& adjacency, const Eigen::MatrixXd& x);

/// Same, building the normalized adjacency from the grid.
ForwardCache gcn_forward(const Model& model, const PowerGrid& grid, const Eigen::MatrixXd& x);

/// Elementwise activation and its derivative with respect to the input.
Eigen::MatrixXd activate(Activation activation, const Eigen::MatrixXd& z);
Eigen::MatrixXd activate_derivative(Activation activation, const Eigen::MatrixXd& z, const Eigen::MatrixXd& out);

/// Applies the output head to raw outputs.
Eigen::VectorXd apply_head(Head head, const Eigen::VectorXd& raw);

/// Gradients with respect to every parameter, flattened in the order of
/// Model::parameters(). `output_grad` is dLoss/d(raw output); `adjacency`
/// is null for node-local models.
std::vector<double> backward(const Model& model, const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                             const Eigen::SparseMatrix<double>* adjacency);

}  // namespace gridstab::ml
