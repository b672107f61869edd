#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace oracle {

namespace {

void swing_rhs(std::size_t n, const EdgeList& edges, const std::vector<double>& injection, double inertia,
               double damping, double coupling, const std::vector<double>& phase,
               const std::vector<double>& frequency, std::vector<double>& dphase, std::vector<double>& dfrequency)
{
    for (std::size_t i = 0; i < n; ++i) {
        dphase[i] = frequency[i];
        dfrequency[i] = injection[i] - damping * frequency[i];
    }
    for (const auto& [a, b] : edges) {
        const double f = coupling * std::sin(phase[a] - phase[b]);
        dfrequency[a] -= f;
        dfrequency[b] += f;
    }
    for (std::size_t i = 0; i < n; ++i) {
        dfrequency[i] /= inertia;
    }
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (const double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

}  // namespace

Rk4Result rk4(std::size_t n, const EdgeList& edges, const std::vector<double>& injection, double inertia,
              double damping, double coupling, std::vector<double> phase, std::vector<double> frequency,
              double dt, double t_end)
{
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<double> k1p(n), k1f(n), k2p(n), k2f(n), k3p(n), k3f(n), k4p(n), k4f(n), tp(n), tf(n);
    Rk4Result r;
    r.max_frequency = max_abs(frequency);
    const auto rhs = [&](const std::vector<double>& p, const std::vector<double>& f, std::vector<double>& dp,
                         std::vector<double>& df) {
        swing_rhs(n, edges, injection, inertia, damping, coupling, p, f, dp, df);
    };
    for (std::size_t s = 0; s < steps; ++s) {
        rhs(phase, frequency, k1p, k1f);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = phase[i] + 0.5 * dt * k1p[i];
            tf[i] = frequency[i] + 0.5 * dt * k1f[i];
        }
        rhs(tp, tf, k2p, k2f);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = phase[i] + 0.5 * dt * k2p[i];
            tf[i] = frequency[i] + 0.5 * dt * k2f[i];
        }
        rhs(tp, tf, k3p, k3f);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = phase[i] + dt * k3p[i];
            tf[i] = frequency[i] + dt * k3f[i];
        }
        rhs(tp, tf, k4p, k4f);
        for (std::size_t i = 0; i < n; ++i) {
            phase[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
            frequency[i] += dt / 6.0 * (k1f[i] + 2.0 * k2f[i] + 2.0 * k3f[i] + k4f[i]);
        }
        r.max_frequency = std::max(r.max_frequency, max_abs(frequency));
    }
    r.phase = std::move(phase);
    r.frequency = std::move(frequency);
    return r;
}

double binomial_tail(std::size_t n, std::size_t s, double p)
{
    long double sum = 0.0L;
    for (std::size_t k = s; k <= n; ++k) {
        const long double log_choose = std::lgamma(static_cast<long double>(n) + 1.0L) -
                                       std::lgamma(static_cast<long double>(k) + 1.0L) -
                                       std::lgamma(static_cast<long double>(n - k) + 1.0L);
        long double term = std::exp(log_choose);
        term *= std::pow(static_cast<long double>(p), static_cast<long double>(k));
        term *= std::pow(1.0L - static_cast<long double>(p), static_cast<long double>(n - k));
        sum += term;
    }
    return static_cast<double>(std::min(sum, 1.0L));
}

double cp_lower(std::size_t n, std::size_t s, double alpha)
{
    if (s == 0) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (binomial_tail(n, s, mid) > alpha) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

namespace {

std::vector<std::vector<std::size_t>> adjacency(std::size_t n, const EdgeList& edges)
{
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    return adj;
}

}  // namespace

std::vector<double> shortest_path_betweenness(std::size_t n, const EdgeList& edges)
{
    const auto adj = adjacency(n, edges);
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, -1.0));
    std::vector<std::vector<double>> paths(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        std::queue<std::size_t> q;
        dist[s][s] = 0.0;
        paths[s][s] = 1.0;
        q.push(s);
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (const auto v : adj[u]) {
                if (dist[s][v] < 0.0) {
                    dist[s][v] = dist[s][u] + 1.0;
                    q.push(v);
                }
                if (dist[s][v] == dist[s][u] + 1.0) {
                    paths[s][v] += paths[s][u];
                }
            }
        }
    }
    std::vector<double> b(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t t = s + 1; t < n; ++t) {
                if (s == v || t == v) {
                    continue;
                }
                if (dist[s][v] + dist[v][t] == dist[s][t]) {
                    b[v] += paths[s][v] * paths[v][t] / paths[s][t];
                }
            }
        }
    }
    if (n > 2) {
        const double norm = static_cast<double>((n - 1) * (n - 2)) / 2.0;
        for (auto& x : b) {
            x /= norm;
        }
    }
    return b;
}

std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot][c]) < 1e-300) {
            throw std::runtime_error("singular system");
        }
        std::swap(a[c], a[pivot]);
        std::swap(b[c], b[pivot]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t k = r + 1; k < n; ++k) {
            acc -= a[r][k] * x[k];
        }
        x[r] = acc / a[r][r];
    }
    return x;
}

std::vector<double> current_flow_betweenness(std::size_t n, const EdgeList& edges)
{
    // Grounded Laplacian: node n-1 has potential 0.
    std::vector<std::vector<double>> lap(n - 1, std::vector<double>(n - 1, 0.0));
    for (const auto& [a, b] : edges) {
        if (a < n - 1) {
            lap[a][a] += 1.0;
        }
        if (b < n - 1) {
            lap[b][b] += 1.0;
        }
        if (a < n - 1 && b < n - 1) {
            lap[a][b] -= 1.0;
            lap[b][a] -= 1.0;
        }
    }
    std::vector<double> through(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = s + 1; t < n; ++t) {
            std::vector<double> rhs(n - 1, 0.0);
            if (s < n - 1) {
                rhs[s] += 1.0;
            }
            if (t < n - 1) {
                rhs[t] -= 1.0;
            }
            std::vector<double> potential = solve(lap, rhs);
            potential.push_back(0.0);
            std::vector<double> node_flow(n, 0.0);
            for (const auto& [a, b] : edges) {
                const double f = std::abs(potential[a] - potential[b]);
                node_flow[a] += f;
                node_flow[b] += f;
            }
            for (std::size_t v = 0; v < n; ++v) {
                if (v != s && v != t) {
                    through[v] += 0.5 * node_flow[v];
                }
            }
        }
    }
    if (n > 2) {
        const double norm = static_cast<double>((n - 1) * (n - 2)) / 2.0;
        for (auto& x : through) {
            x /= norm;
        }
    }
    return through;
}

std::vector<EdgeList> all_trees(std::size_t n)
{
    if (n == 2) {
        return {EdgeList{{0, 1}}};
    }
    std::vector<EdgeList> trees;
    const std::size_t len = n - 2;
    std::vector<std::size_t> seq(len, 0);
    while (true) {
        std::vector<std::size_t> degree(n, 1);
        for (const auto x : seq) {
            ++degree[x];
        }
        EdgeList edges;
        for (const auto x : seq) {
            for (std::size_t leaf = 0; leaf < n; ++leaf) {
                if (degree[leaf] == 1) {
                    edges.emplace_back(std::min(leaf, x), std::max(leaf, x));
                    --degree[leaf];
                    --degree[x];
                    break;
                }
            }
        }
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (degree[v] == 1) {
                if (u == n) {
                    u = v;
                } else {
                    edges.emplace_back(u, v);
                }
            }
        }
        trees.push_back(std::move(edges));
        std::size_t pos = 0;
        while (pos < len && ++seq[pos] == n) {
            seq[pos] = 0;
            ++pos;
        }
        if (pos == len) {
            break;
        }
    }
    return trees;
}

}  // namespace oracle
