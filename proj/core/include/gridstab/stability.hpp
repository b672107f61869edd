#pragma once

#include "gridstab/dynamics.hpp"
#include "gridstab/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace gridstab {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

enum class PerturbationKind { snbs, tm };

/// Rectangle of single-node perturbations (delta phase, delta frequency).
struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::snbs;
    Interval phase{-std::numbers::pi, std::numbers::pi};
    Interval frequency{-15.0, 15.0};

    /// [-pi, pi] x [-15, 15].
    static PerturbationSpec snbs() noexcept { return {}; }
    /// [-pi, pi) x [-2.5, 2.5].
    static PerturbationSpec tm() noexcept;

    /// Throws ConfigError when lo > hi or the rectangle leaves the range
    /// allowed for its kind.
    void validate() const;
};

/// Frequency bound of the troublemaker perturbation set; SNBS trials inside
/// it double as troublemaker trials.
inline constexpr double kTmFrequencyBound = 2.5;

struct TmConfig {
    double beta = 15.0;       // critical frequency, mfd < beta counts as "within bound"
    double gamma = 0.005;     // tolerated failure probability
    double alpha_cp = 0.001;  // Clopper-Pearson confidence parameter
    /// Nodes with fewer troublemaker trials than this receive supplementary
    /// trials drawn from PerturbationSpec::tm().
    std::size_t min_tm_trials = 1;

    /// gamma used for imported large grids.
    static constexpr double kImportedGamma = 0.05;

    void validate() const;
};

struct NodeStats {
    std::size_t node = 0;
    std::size_t n_trials = 0;
    std::size_t n_stable = 0;
    double snbs = 0.0;
    double snbs_se = 0.0;
    std::size_t n_tm_trials = 0;
    std::size_t n_within_bound = 0;
    /// Largest mfd among troublemaker trials that completed.
    double mfd_max = 0.0;
    double cp_lower = 0.0;
    bool tm = false;

    friend bool operator==(const NodeStats&, const NodeStats&) = default;
};

/// Seed of one trial, a pure function of its coordinates. `stream`
/// separates the SNBS trial set from supplementary troublemaker trials.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t grid_id, std::size_t node,
                         std::size_t trial, std::uint64_t stream = 0) noexcept;

struct Perturbation {
    double phase = 0.0;
    double frequency = 0.0;
};

Perturbation draw_perturbation(const PerturbationSpec& spec, std::uint64_t seed) noexcept;

/// (fixed_point, 0) with node i shifted by a perturbation drawn from spec.
/// Throws DimensionError when i is out of range.
GridState sample_perturbation(std::size_t node, const PerturbationSpec& spec, std::span<const double> fixed_point,
                              std::uint64_t seed);

struct TrialOutcome {
    std::size_t node = 0;
    std::size_t trial = 0;
    Perturbation perturbation;
    bool supplementary = false;
    TrialResult result;
    double seconds = 0.0;
};

struct EstimationConfig {
    SwingParams swing;
    IntegratorConfig integrator;
    TmConfig tm;
    PerturbationSpec perturbation;
    std::size_t trials = 500;
    std::uint64_t master_seed = 0;
    std::uint64_t grid_id = 0;
    unsigned workers = 0;  // 0: default_workers()
    /// Stop trials early once certified synchronous (same labels and mfd).
    bool certified_exit = true;
    /// Called from worker threads after each trial; must be thread-safe.
    std::function<void(const TrialOutcome&)> on_trial;

    void validate() const;
};

/// Pure reduction of per-node trial outcomes into statistics.
/// `tm_outcomes` are the troublemaker trials (filtered SNBS trials plus
/// supplementary ones). Requires at least one SNBS and one TM trial.
NodeStats summarize_node(std::size_t node, std::span<const TrialOutcome> snbs_outcomes,
                         std::span<const TrialOutcome> tm_outcomes, const TmConfig& tm);

/// Monte-Carlo statistics of one node. The fixed point must be the grid's
/// operating point (see find_fixed_point).
NodeStats estimate_node(const PowerGrid& grid, std::span<const double> fixed_point, std::size_t node,
                        const EstimationConfig& cfg);

/// Statistics for all nodes. Computes the fixed point (NoSyncStateError
/// propagates); results are independent of the worker count.
std::vector<NodeStats> estimate_grid(const PowerGrid& grid, const EstimationConfig& cfg);

/// Same, reusing a precomputed fixed point.
std::vector<NodeStats> estimate_grid(const PowerGrid& grid, std::span<const double> fixed_point,
                                     const EstimationConfig& cfg);

/// false iff clopper_pearson_lower(n_tm_trials, n_within_bound, alpha_cp) >= 1 - gamma.
/// Throws ConfigError when n_tm_trials == 0.
bool classify_tm(const NodeStats& stats, const TmConfig& tm);

/// Per-grid result CSV: node, n_trials, n_stable, snbs, snbs_se,
/// n_tm_trials, n_within_bound, mfd_max, cp_lower, tm.
std::string stats_to_csv(std::span<const NodeStats> stats);
std::vector<NodeStats> read_stats_csv(const std::filesystem::path& path);

}  // namespace gridstab
