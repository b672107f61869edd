#include "gridstab/features.hpp"

#include "gridstab/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace gridstab {

namespace {

void require_connected(const PowerGrid& grid)
{
    if (!grid.is_connected()) {
        throw ConnectivityError("node features are undefined on a disconnected graph");
    }
}

// Sum of |v_s - v_t| over all unordered pairs, from values sorted ascending.
double pairwise_abs_sum(const std::vector<double>& sorted)
{
    double total = 0.0;
    double prefix = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        total += static_cast<double>(k) * sorted[k] - prefix;
        prefix += sorted[k];
    }
    return total;
}

}  // namespace

Eigen::MatrixXd laplacian_pseudoinverse(const PowerGrid& grid)
{
    require_connected(grid);
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd shifted = Eigen::MatrixXd::Constant(n, n, inv_n);
    for (Eigen::Index i = 0; i < n; ++i) {
        shifted(i, i) += static_cast<double>(grid.degree(static_cast<std::size_t>(i)));
    }
    for (const auto& [a, b] : grid.edges()) {
        shifted(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -= 1.0;
        shifted(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) -= 1.0;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw ConnectivityError("Laplacian factorization failed; graph may be disconnected");
    }
    Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(n, n));
    inverse.array() -= inv_n;
    return inverse;
}

Eigen::VectorXd current_flow_betweenness(const PowerGrid& grid)
{
    const std::size_t n = grid.size();
    Eigen::VectorXd score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (n < 3) {
        require_connected(grid);
        return score;
    }
    const Eigen::MatrixXd pinv = laplacian_pseudoinverse(grid);

    // For a unit current injected at s and extracted at t, the current on
    // edge (u, w) is b(s) - b(t) with b(x) = pinv(u, x) - pinv(w, x). The
    // throughput of a node v (not s or t) is half the sum of |current| over
    // its incident edges.
    std::vector<double> row(n);
    std::vector<double> sorted(n);
    for (const auto& [u, w] : grid.edges()) {
        const auto ui = static_cast<Eigen::Index>(u);
        const auto wi = static_cast<Eigen::Index>(w);
        for (std::size_t x = 0; x < n; ++x) {
            row[x] = pinv(ui, static_cast<Eigen::Index>(x)) - pinv(wi, static_cast<Eigen::Index>(x));
        }
        sorted = row;
        std::sort(sorted.begin(), sorted.end());
        const double all_pairs = pairwise_abs_sum(sorted);
        for (const std::size_t endpoint : {u, w}) {
            double involving = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                involving += std::abs(row[endpoint] - row[x]);
            }
            score(static_cast<Eigen::Index>(endpoint)) += 0.5 * (all_pairs - involving);
        }
    }
    const double pairs = 0.5 * static_cast<double>(n - 1) * static_cast<double>(n - 2);
    return score / pairs;
}

NodeFeatures node_features(const PowerGrid& grid)
{
    require_connected(grid);
    const std::size_t n = grid.size();
    NodeFeatures f(static_cast<Eigen::Index>(n), kFeatureCount);

    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto nb = grid.neighbors(i);
        const auto deg = static_cast<double>(nb.size());
        f(row, static_cast<int>(Feature::degree)) = deg;

        double neighbor_degree = 0.0;
        for (std::size_t j : nb) {
            neighbor_degree += static_cast<double>(grid.degree(j));
        }
        f(row, static_cast<int>(Feature::average_neighbor_degree)) = nb.empty() ? 0.0 : neighbor_degree / deg;

        double clustering = 0.0;
        if (nb.size() >= 2) {
            std::size_t links = 0;
            for (std::size_t a = 0; a < nb.size(); ++a) {
                for (std::size_t b = a + 1; b < nb.size(); ++b) {
                    links += grid.has_edge(nb[a], nb[b]) ? 1 : 0;
                }
            }
            clustering = 2.0 * static_cast<double>(links) / (deg * (deg - 1.0));
        }
        f(row, static_cast<int>(Feature::clustering)) = clustering;

        double closeness = 0.0;
        if (n > 1) {
            const auto dist = bfs_distances(grid, i);
            const double total = static_cast<double>(std::accumulate(dist.begin(), dist.end(), std::size_t{0}));
            closeness = static_cast<double>(n - 1) / total;
        }
        f(row, static_cast<int>(Feature::closeness)) = closeness;
        f(row, static_cast<int>(Feature::injection)) = grid.injections()[i];
    }

    f.col(static_cast<int>(Feature::current_flow_betweenness)) = current_flow_betweenness(grid);
    return f;
}

NodeFeatures FeatureScaler::apply(const NodeFeatures& x) const
{
    if (pooled) {
        NodeFeatures out = ((x.array().rowwise() - mean.row(0).array()).rowwise() / std.row(0).array()).matrix();
        return out;
    }
    if (x.rows() != mean.rows()) {
        throw DimensionError("feature scaler was fitted on grids with " + std::to_string(mean.rows()) +
                             " nodes, got " + std::to_string(x.rows()));
    }
    NodeFeatures out = ((x.array() - mean.array()) / std.array()).matrix();
    return out;
}

namespace {

void fix_degenerate(FeatureScaler& scaler, bool warn)
{
    std::size_t degenerate = 0;
    for (Eigen::Index i = 0; i < scaler.std.rows(); ++i) {
        for (int c = 0; c < kFeatureCount; ++c) {
            const double scale = std::max(1.0, std::abs(scaler.mean(i, c)));
            if (!(scaler.std(i, c) > 1e-12 * scale)) {
                scaler.std(i, c) = 1.0;
                ++degenerate;
            }
        }
    }
    if (warn && degenerate > 0) {
        std::cerr << "warning: " << degenerate
                  << " zero-variance feature entries left unscaled during standardization\n";
    }
}

}  // namespace

FeatureScaler fit_scaler(std::span<const NodeFeatures> collection, bool warn)
{
    if (collection.empty()) {
        throw ConfigError("cannot fit a feature scaler on an empty collection");
    }
    const Eigen::Index n = collection.front().rows();
    for (const auto& x : collection) {
        if (x.rows() != n) {
            throw DimensionError("node-wise standardization requires grids with equal node counts");
        }
    }
    const double count = static_cast<double>(collection.size());
    FeatureScaler scaler;
    scaler.mean = Eigen::MatrixXd::Zero(n, kFeatureCount);
    for (const auto& x : collection) {
        scaler.mean += x;
    }
    scaler.mean /= count;
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, kFeatureCount);
    for (const auto& x : collection) {
        var.array() += (x - scaler.mean).array().square();
    }
    var /= count;
    scaler.std = var.array().sqrt().matrix();

    fix_degenerate(scaler, warn);
    return scaler;
}

FeatureScaler fit_pooled_scaler(std::span<const NodeFeatures> collection, bool warn)
{
    double rows = 0.0;
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(kFeatureCount);
    for (const auto& x : collection) {
        sum += x.colwise().sum();
        rows += static_cast<double>(x.rows());
    }
    if (rows == 0.0) {
        throw ConfigError("cannot fit a feature scaler on an empty collection");
    }
    FeatureScaler scaler;
    scaler.pooled = true;
    scaler.mean = sum / rows;
    Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(kFeatureCount);
    for (const auto& x : collection) {
        var += (x.array().rowwise() - scaler.mean.row(0).array()).square().colwise().sum().matrix();
    }
    scaler.std = (var / rows).array().sqrt().matrix();
    fix_degenerate(scaler, warn);
    return scaler;
}

}  // namespace gridstab
