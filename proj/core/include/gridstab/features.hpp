#pragma once

#include "gridstab/grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace gridstab {

/// Column order of the hand-crafted feature matrix.
enum class Feature : int {
    degree = 0,
    average_neighbor_degree,
    clustering,
    current_flow_betweenness,
    closeness,
    injection,
};

inline constexpr int kFeatureCount = 6;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "degree", "average_neighbor_degree", "clustering", "current_flow_betweenness", "closeness", "injection"};

/// One row per node, columns ordered as in Feature.
using NodeFeatures = Eigen::Matrix<double, Eigen::Dynamic, kFeatureCount, Eigen::RowMajor>;

/// Hand-crafted node features of a connected grid. Throws ConnectivityError
/// for disconnected graphs.
///
/// Current-flow betweenness uses the Laplacian pseudo-inverse and is
/// normalized by (n-1)(n-2)/2 over unordered source/sink pairs excluding the
/// node itself, so it coincides with normalized shortest-path betweenness
/// on trees. Closeness is (n-1) / sum of hop distances.
NodeFeatures node_features(const PowerGrid& grid);

/// Current-flow betweenness only (exposed for tests and benchmarks).
Eigen::VectorXd current_flow_betweenness(const PowerGrid& grid);

/// Moore-Penrose pseudo-inverse of the combinatorial Laplacian of a
/// connected graph, via (L + J/n)^-1 - J/n.
Eigen::MatrixXd laplacian_pseudoinverse(const PowerGrid& grid);

/// Node-wise standardization statistics: for every node index and feature,
/// mean and standard deviation over a collection of equally sized grids.
///
/// A pooled scaler holds a single row shared by every node and applies to
/// grids of any size; it is used when a collection has a single grid.
struct FeatureScaler {
    Eigen::MatrixXd mean;  // n x kFeatureCount (1 x kFeatureCount when pooled)
    Eigen::MatrixXd std;   // same shape; 1 where the feature is constant
    bool pooled = false;

    std::size_t node_count() const { return static_cast<std::size_t>(mean.rows()); }

    /// Returns (x - mean) / std. Throws DimensionError on a row-count
    /// mismatch (per-node scalers only).
    NodeFeatures apply(const NodeFeatures& x) const;
};

/// Fits node-wise statistics (population standard deviation) on the given
/// collection. Zero-variance entries keep std = 1 and emit one warning on
/// standard error. Throws DimensionError if node counts differ and
/// ConfigError for an empty collection.
FeatureScaler fit_scaler(std::span<const NodeFeatures> collection, bool warn = true);

/// Per-feature statistics over all nodes of all grids in the collection
/// (sizes may differ).
FeatureScaler fit_pooled_scaler(std::span<const NodeFeatures> collection, bool warn = true);

}  // namespace gridstab
