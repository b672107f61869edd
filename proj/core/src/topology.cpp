#include "gridstab/topology.hpp"

#include "gridstab/error.hpp"
#include "gridstab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace gridstab {

void GrowthParams::validate() const
{
    auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (n == 0) {
        throw ConfigError("growth model: n must be positive");
    }
    if (n0 < 1 || n0 > n) {
        throw ConfigError("growth model: n0 must be in [1, n]");
    }
    if (!unit(p) || !unit(q) || !unit(s)) {
        throw ConfigError("growth model: p, q and s must be probabilities in [0, 1]");
    }
    if (!std::isfinite(r) || r < 0.0) {
        throw ConfigError("growth model: r must be a finite non-negative exponent");
    }
}

namespace {

struct Point {
    double x;
    double y;
};

double distance(const Point& a, const Point& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Mutable graph used while growing; node count increases step by step.
class GrowingGraph {
public:
    std::size_t size() const { return adj_.size(); }

    std::size_t add_node()
    {
        adj_.emplace_back();
        return adj_.size() - 1;
    }

    bool connected(std::size_t a, std::size_t b) const { return adj_[a].count(b) != 0; }

    void add_edge(std::size_t a, std::size_t b)
    {
        adj_[a].insert(b);
        adj_[b].insert(a);
        edges_.insert(std::minmax(a, b));
    }

    void remove_edge(std::size_t a, std::size_t b)
    {
        adj_[a].erase(b);
        adj_[b].erase(a);
        edges_.erase(std::minmax(a, b));
    }

    const std::set<Edge>& edges() const { return edges_; }

    std::vector<std::size_t> hops_from(std::size_t source) const
    {
        constexpr auto unreachable = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> dist(adj_.size(), unreachable);
        std::vector<std::size_t> queue{source};
        dist[source] = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t u = queue[head];
            for (std::size_t v : adj_[u]) {
                if (dist[v] == unreachable) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        return dist;
    }

private:
    std::vector<std::set<std::size_t>> adj_;
    std::set<Edge> edges_;
};

// Best redundancy partner for `from`: argmax over non-neighbors of
// (hops + 1)^r / dist. Ties break toward the lower index. Returns SIZE_MAX
// when `from` is already adjacent to every other node.
std::size_t best_partner(const GrowingGraph& g, const std::vector<Point>& pos, std::size_t from, double r)
{
    const auto hops = g.hops_from(from);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_score = -1.0;
    for (std::size_t l = 0; l < g.size(); ++l) {
        if (l == from || g.connected(from, l)) {
            continue;
        }
        // Unreachable only happens transiently for isolated initial nodes; treat as far.
        const double h = hops[l] == std::numeric_limits<std::size_t>::max() ? static_cast<double>(g.size())
                                                                             : static_cast<double>(hops[l]);
        const double d = std::max(distance(pos[from], pos[l]), 1e-12);
        const double score = std::pow(h + 1.0, r) / d;
        if (score > best_score) {
            best_score = score;
            best = l;
        }
    }
    return best;
}

void add_redundancy_line(GrowingGraph& g, const std::vector<Point>& pos, std::size_t from, double r)
{
    const std::size_t partner = best_partner(g, pos, from, r);
    if (partner != std::numeric_limits<std::size_t>::max()) {
        g.add_edge(from, partner);
    }
}

// Prim's algorithm on the complete Euclidean graph of the first k nodes.
void minimum_spanning_tree(GrowingGraph& g, const std::vector<Point>& pos, std::size_t k)
{
    if (k < 2) {
        return;
    }
    std::vector<double> best(k, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(k, 0);
    std::vector<bool> in_tree(k, false);
    best[0] = 0.0;
    for (std::size_t iter = 0; iter < k; ++iter) {
        std::size_t u = k;
        for (std::size_t v = 0; v < k; ++v) {
            if (!in_tree[v] && (u == k || best[v] < best[u])) {
                u = v;
            }
        }
        in_tree[u] = true;
        if (iter > 0) {
            g.add_edge(parent[u], u);
        }
        for (std::size_t v = 0; v < k; ++v) {
            const double d = distance(pos[u], pos[v]);
            if (!in_tree[v] && d < best[v]) {
                best[v] = d;
                parent[v] = u;
            }
        }
    }
}

}  // namespace

PowerGrid generate_topology(const GrowthParams& params)
{
    params.validate();
    rng::CounterStream stream(params.seed, 0x746f706fULL);

    GrowingGraph g;
    std::vector<Point> pos;
    pos.reserve(params.n);

    for (std::size_t i = 0; i < params.n0; ++i) {
        g.add_node();
        const double x = stream.uniform();
        const double y = stream.uniform();
        pos.push_back({x, y});
    }
    minimum_spanning_tree(g, pos, params.n0);

    const auto initial_lines = static_cast<std::size_t>(
        std::floor(static_cast<double>(params.n0) * (1.0 - params.s) * (params.p + params.q)));
    for (std::size_t k = 0; k < initial_lines; ++k) {
        // Pick the globally best non-edge among the initial nodes.
        std::size_t best_a = 0;
        std::size_t best_b = 0;
        double best_score = -1.0;
        for (std::size_t a = 0; a < g.size(); ++a) {
            const auto hops = g.hops_from(a);
            for (std::size_t b = a + 1; b < g.size(); ++b) {
                if (g.connected(a, b)) {
                    continue;
                }
                const double d = std::max(distance(pos[a], pos[b]), 1e-12);
                const double score = std::pow(static_cast<double>(hops[b]) + 1.0, params.r) / d;
                if (score > best_score) {
                    best_score = score;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (best_score < 0.0) {
            break;
        }
        g.add_edge(best_a, best_b);
    }

    while (g.size() < params.n) {
        // Draw every decision up front so the stream layout does not depend
        // on which branch is taken.
        const double split_draw = stream.uniform();
        const double x = stream.uniform();
        const double y = stream.uniform();
        const double p_draw = stream.uniform();
        const double q_draw = stream.uniform();
        const std::uint64_t pick = stream();

        if (split_draw < params.s && !g.edges().empty()) {
            auto it = g.edges().begin();
            std::advance(it, static_cast<std::ptrdiff_t>(pick % g.edges().size()));
            const auto [a, b] = *it;
            g.remove_edge(a, b);
            const std::size_t mid = g.add_node();
            pos.push_back({0.5 * (pos[a].x + pos[b].x), 0.5 * (pos[a].y + pos[b].y)});
            g.add_edge(a, mid);
            g.add_edge(mid, b);
            continue;
        }

        const std::size_t node = g.add_node();
        pos.push_back({x, y});
        if (node > 0) {
            std::size_t nearest = 0;
            double nearest_d = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < node; ++l) {
                const double d = distance(pos[node], pos[l]);
                if (d < nearest_d) {
                    nearest_d = d;
                    nearest = l;
                }
            }
            g.add_edge(node, nearest);
        }
        if (p_draw < params.p) {
            add_redundancy_line(g, pos, node, params.r);
        }
        if (q_draw < params.q && node > 0) {
            const std::size_t other = static_cast<std::size_t>(pick % node);
            add_redundancy_line(g, pos, other, params.r);
        }
    }

    std::vector<Edge> edges(g.edges().begin(), g.edges().end());
    return PowerGrid(params.n, std::move(edges));
}

PowerGrid assign_injections(const PowerGrid& topology, std::uint64_t seed)
{
    const std::size_t n = topology.size();
    if (n % 2 != 0) {
        throw BalanceError("cannot balance sources and sinks on a grid with odd node count " +
                           std::to_string(n));
    }
    std::vector<double> inj(n, -1.0);
    std::fill(inj.begin(), inj.begin() + static_cast<std::ptrdiff_t>(n / 2), 1.0);
    rng::CounterStream stream(seed, 0x696e6a65ULL);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(stream.below(i));
        std::swap(inj[i - 1], inj[j]);
    }
    return topology.with_injections(std::move(inj));
}

}  // namespace gridstab
