#pragma once

#include "gridstab/grid.hpp"

#include <cstdint>

namespace gridstab {

/// Parameters of the spatial random growth model for power-grid topologies.
///
/// Nodes are placed uniformly in the unit square. The initial n0 nodes are
/// joined by their Euclidean minimum spanning tree plus floor(n0 (1-s)(p+q))
/// redundancy lines. Each growth step then either splits a random line with
/// a new midpoint node (probability s) or attaches a new node to its
/// spatially nearest neighbor, optionally adding a redundancy line from the
/// new node (probability p) and from a random existing node (probability q).
/// Redundancy lines go to the non-neighbor l maximizing
/// (hops(i, l) + 1)^r / dist(i, l).
struct GrowthParams {
    std::size_t n = 20;
    std::size_t n0 = 1;
    double p = 0.2;
    double q = 0.3;
    double r = 1.0 / 3.0;
    double s = 0.1;
    std::uint64_t seed = 0;

    /// Throws ConfigError when out of range.
    void validate() const;
};

/// Connected simple topology (injections all zero). Pure function of params.
PowerGrid generate_topology(const GrowthParams& params);

/// Random balanced assignment of +1 sources and -1 sinks, uniform over all
/// assignments with n/2 of each. Throws BalanceError for odd n.
PowerGrid assign_injections(const PowerGrid& topology, std::uint64_t seed);

}  // namespace gridstab
