#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gridstab {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected simple graph plus per-node power injections P^d.
///
/// Construction enforces the structural invariants (indices in range, no
/// self-loops, no duplicate edges, one injection per node). Edges are kept
/// normalized as (min, max) and sorted. Connectivity and power balance are
/// domain invariants checked by validate(); they are kept separate so that
/// test harnesses can build unbalanced or isolated systems for the dynamics.
class PowerGrid {
public:
    PowerGrid() = default;
    PowerGrid(std::size_t n, std::vector<Edge> edges, std::vector<double> injections = {});

    std::size_t size() const noexcept { return n_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::span<const Edge> edges() const noexcept { return edges_; }
    std::span<const double> injections() const noexcept { return injections_; }

    /// Neighbor list of node i, sorted ascending.
    std::span<const std::size_t> neighbors(std::size_t i) const noexcept
    {
        return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
    }
    std::size_t degree(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }
    bool has_edge(std::size_t i, std::size_t j) const noexcept;

    /// Returns a copy with the given injections (length must equal size()).
    PowerGrid with_injections(std::vector<double> injections) const;

    bool is_connected() const;

    /// Throws ConnectivityError, BalanceError or SchemaError when the grid is
    /// not a valid dataset grid: connected, injections in {-1, +1}, summing to 0.
    void validate() const;

    /// Relabels nodes: node i of the result is node perm[i] of this grid.
    PowerGrid permuted(std::span<const std::size_t> perm) const;

    friend bool operator==(const PowerGrid& a, const PowerGrid& b)
    {
        return a.n_ == b.n_ && a.edges_ == b.edges_ && a.injections_ == b.injections_;
    }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<double> injections_;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> adjacency_;
};

/// Hop distances from `source` (breadth-first); unreachable nodes get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const PowerGrid& grid, std::size_t source);

/// Grid JSON document: {"n": int, "edges": [[i, j], ...], "injections": [+-1, ...]}.
std::string grid_to_json(const PowerGrid& grid);
PowerGrid grid_from_json(const std::string& text);

/// Writes the grid JSON document; throws IoError on failure.
void write_grid(const PowerGrid& grid, const std::filesystem::path& path);

/// Reads and fully validates a grid file (schema, simple graph,
/// connectivity, balance). Throws SchemaError / ConnectivityError /
/// BalanceError / IoError.
PowerGrid import_grid(const std::filesystem::path& path);

}  // namespace gridstab
