#pragma once

// Independent reference implementations used as test oracles. They share
// no code with the library beyond plain data types.

#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

struct Rk4Result {
    std::vector<double> phase;
    std::vector<double> frequency;
    double max_frequency = 0.0;  // over all nodes and all steps, including t = 0
};

/// Classical fixed-step RK4 on M phi'' = P - alpha phi' - K sum sin(phi_i - phi_j).
Rk4Result rk4(std::size_t n, const EdgeList& edges, const std::vector<double>& injection, double inertia,
              double damping, double coupling, std::vector<double> phase, std::vector<double> frequency,
              double dt, double t_end);

/// P[Bin(n, p) >= s] by direct summation of the probability mass function.
double binomial_tail(std::size_t n, std::size_t s, double p);

/// inf{p : P[Bin(n, p) >= s] > alpha} by bisection on binomial_tail.
double cp_lower(std::size_t n, std::size_t s, double alpha);

/// Normalized shortest-path betweenness by explicit path counting.
std::vector<double> shortest_path_betweenness(std::size_t n, const EdgeList& edges);

/// Normalized current-flow betweenness: one dense linear solve per
/// source/sink pair.
std::vector<double> current_flow_betweenness(std::size_t n, const EdgeList& edges);

/// All labelled trees on n >= 2 nodes, decoded from Pruefer sequences.
std::vector<EdgeList> all_trees(std::size_t n);

/// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b);

}  // namespace oracle
