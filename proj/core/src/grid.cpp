#include "gridstab/grid.hpp"

#include "gridstab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace gridstab {

using json = nlohmann::json;

PowerGrid::PowerGrid(std::size_t n, std::vector<Edge> edges, std::vector<double> injections)
    : n_(n), edges_(std::move(edges)), injections_(std::move(injections))
{
    if (injections_.empty()) {
        injections_.assign(n_, 0.0);
    }
    if (injections_.size() != n_) {
        throw DimensionError("injection vector has length " + std::to_string(injections_.size()) +
                             ", expected " + std::to_string(n_));
    }
    for (auto& [a, b] : edges_) {
        if (a >= n_ || b >= n_) {
            throw SchemaError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                              ") references a node outside [0, " + std::to_string(n_) + ")");
        }
        if (a == b) {
            throw SchemaError("self-loop at node " + std::to_string(a));
        }
        if (a > b) {
            std::swap(a, b);
        }
    }
    std::sort(edges_.begin(), edges_.end());
    if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end()) {
        throw SchemaError("duplicate edge (" + std::to_string(dup->first) + ", " +
                          std::to_string(dup->second) + ")");
    }

    std::vector<std::size_t> deg(n_, 0);
    for (const auto& [a, b] : edges_) {
        ++deg[a];
        ++deg[b];
    }
    offsets_.assign(n_ + 1, 0);
    std::partial_sum(deg.begin(), deg.end(), offsets_.begin() + 1);
    adjacency_.resize(offsets_[n_]);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [a, b] : edges_) {
        adjacency_[fill[a]++] = b;
        adjacency_[fill[b]++] = a;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
    }
}

bool PowerGrid::has_edge(std::size_t i, std::size_t j) const noexcept
{
    const auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

PowerGrid PowerGrid::with_injections(std::vector<double> injections) const
{
    return PowerGrid(n_, edges_, std::move(injections));
}

bool PowerGrid::is_connected() const
{
    if (n_ == 0) {
        return false;
    }
    const auto dist = bfs_distances(*this, 0);
    return std::none_of(dist.begin(), dist.end(),
                        [](std::size_t d) { return d == std::numeric_limits<std::size_t>::max(); });
}

void PowerGrid::validate() const
{
    if (n_ == 0) {
        throw SchemaError("grid has no nodes");
    }
    if (!is_connected()) {
        throw ConnectivityError("grid with " + std::to_string(n_) + " nodes is not connected");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const double p = injections_[i];
        if (p != 1.0 && p != -1.0) {
            throw SchemaError("injection at node " + std::to_string(i) + " is not in {-1, 1}");
        }
        total += p;
    }
    if (total != 0.0) {
        throw BalanceError("injections sum to " + std::to_string(total) + ", expected 0");
    }
}

PowerGrid PowerGrid::permuted(std::span<const std::size_t> perm) const
{
    if (perm.size() != n_) {
        throw DimensionError("permutation length does not match node count");
    }
    std::vector<std::size_t> inverse(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        inverse[perm[i]] = i;
    }
    std::vector<Edge> edges;
    edges.reserve(edges_.size());
    for (const auto& [a, b] : edges_) {
        edges.emplace_back(inverse[a], inverse[b]);
    }
    std::vector<double> inj(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        inj[i] = injections_[perm[i]];
    }
    return PowerGrid(n_, std::move(edges), std::move(inj));
}

std::vector<std::size_t> bfs_distances(const PowerGrid& grid, std::size_t source)
{
    constexpr auto unreachable = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(grid.size(), unreachable);
    std::queue<std::size_t> frontier;
    dist[source] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : grid.neighbors(u)) {
            if (dist[v] == unreachable) {
                dist[v] = dist[u] + 1;
                frontier.push(v);
            }
        }
    }
    return dist;
}

std::string grid_to_json(const PowerGrid& grid)
{
    json doc;
    doc["n"] = grid.size();
    json edges = json::array();
    for (const auto& [a, b] : grid.edges()) {
        edges.push_back({a, b});
    }
    doc["edges"] = std::move(edges);
    json inj = json::array();
    for (double p : grid.injections()) {
        if (p == std::round(p)) {
            inj.push_back(static_cast<long long>(p));
        } else {
            inj.push_back(p);
        }
    }
    doc["injections"] = std::move(inj);
    return doc.dump();
}

PowerGrid grid_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("grid JSON parse error: ") + e.what());
    }
    if (!doc.is_object()) {
        throw SchemaError("grid JSON must be an object");
    }
    for (const char* field : {"n", "edges", "injections"}) {
        if (!doc.contains(field)) {
            throw SchemaError(std::string("grid JSON is missing field '") + field + "'");
        }
    }
    if (!doc["n"].is_number_integer() || doc["n"].get<long long>() <= 0) {
        throw SchemaError("grid field 'n' must be a positive integer");
    }
    const auto n = doc["n"].get<std::size_t>();
    if (!doc["edges"].is_array()) {
        throw SchemaError("grid field 'edges' must be an array");
    }
    std::vector<Edge> edges;
    edges.reserve(doc["edges"].size());
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
            e[0].get<long long>() < 0 || e[1].get<long long>() < 0) {
            throw SchemaError("each edge must be a pair of non-negative integers");
        }
        edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    if (!doc["injections"].is_array() || doc["injections"].size() != n) {
        throw SchemaError("grid field 'injections' must be an array of length n");
    }
    std::vector<double> inj;
    inj.reserve(n);
    for (const auto& p : doc["injections"]) {
        if (!p.is_number()) {
            throw SchemaError("injections must be numbers");
        }
        inj.push_back(p.get<double>());
    }
    return PowerGrid(n, std::move(edges), std::move(inj));
}

void write_grid(const PowerGrid& grid, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << grid_to_json(grid) << '\n';
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

PowerGrid import_grid(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open grid file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    PowerGrid grid = grid_from_json(buffer.str());
    grid.validate();
    return grid;
}

}  // namespace gridstab
