#include "gridstab/stability.hpp"

#include "gridstab/binomial.hpp"
#include "gridstab/csv.hpp"
#include "gridstab/error.hpp"
#include "gridstab/parallel.hpp"
#include "gridstab/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace gridstab {

PerturbationSpec PerturbationSpec::tm() noexcept
{
    return {PerturbationKind::tm, {-std::numbers::pi, std::numbers::pi}, {-kTmFrequencyBound, kTmFrequencyBound}};
}

void PerturbationSpec::validate() const
{
    const auto inside = [](const Interval& inner, double lo, double hi) {
        return inner.lo <= inner.hi && inner.lo >= lo && inner.hi <= hi;
    };
    const double pi = std::numbers::pi;
    const double fmax = kind == PerturbationKind::snbs ? 15.0 : kTmFrequencyBound;
    if (!inside(phase, -pi, pi)) {
        throw ConfigError("perturbation phase range must be an interval inside [-pi, pi]");
    }
    if (!inside(frequency, -fmax, fmax)) {
        throw ConfigError("perturbation frequency range must be an interval inside [-" + format_double(fmax) +
                          ", " + format_double(fmax) + "]");
    }
}

void TmConfig::validate() const
{
    if (!(beta > 0.0)) {
        throw ConfigError("tm beta must be positive");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("tm gamma must lie in (0, 1)");
    }
    if (!(alpha_cp > 0.0 && alpha_cp < 1.0)) {
        throw ConfigError("tm alpha_cp must lie in (0, 1)");
    }
    if (min_tm_trials < 1) {
        throw ConfigError("min_tm_trials must be at least 1");
    }
}

void EstimationConfig::validate() const
{
    swing.validate();
    integrator.validate();
    tm.validate();
    perturbation.validate();
    if (trials == 0) {
        throw ConfigError("trials per node must be at least 1");
    }
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t grid_id, std::size_t node, std::size_t trial,
                         std::uint64_t stream) noexcept
{
    std::uint64_t seed = rng::derive_seed(master_seed, grid_id);
    seed = rng::derive_seed(seed, node);
    seed = rng::derive_seed(seed, trial);
    return rng::derive_seed(seed, stream);
}

Perturbation draw_perturbation(const PerturbationSpec& spec, std::uint64_t seed) noexcept
{
    rng::CounterStream stream(seed);
    Perturbation p;
    p.phase = stream.uniform(spec.phase.lo, spec.phase.hi);
    p.frequency = stream.uniform(spec.frequency.lo, spec.frequency.hi);
    return p;
}

GridState sample_perturbation(std::size_t node, const PerturbationSpec& spec, std::span<const double> fixed_point,
                              std::uint64_t seed)
{
    if (node >= fixed_point.size()) {
        throw DimensionError("perturbed node " + std::to_string(node) + " out of range");
    }
    const Perturbation p = draw_perturbation(spec, seed);
    GridState state(std::vector<double>(fixed_point.begin(), fixed_point.end()),
                    std::vector<double>(fixed_point.size(), 0.0));
    state.phase[node] += p.phase;
    state.frequency[node] = p.frequency;
    return state;
}

NodeStats summarize_node(std::size_t node, std::span<const TrialOutcome> snbs_outcomes,
                         std::span<const TrialOutcome> tm_outcomes, const TmConfig& tm)
{
    NodeStats s;
    s.node = node;
    s.n_trials = snbs_outcomes.size();
    for (const auto& o : snbs_outcomes) {
        s.n_stable += o.result.converged ? 1 : 0;
    }
    s.snbs = s.n_trials ? static_cast<double>(s.n_stable) / static_cast<double>(s.n_trials) : 0.0;
    s.snbs_se = bernoulli_se(s.n_trials, s.n_stable);
    s.n_tm_trials = tm_outcomes.size();
    for (const auto& o : tm_outcomes) {
        const double mfd = o.result.mfd;
        // Nonfinite mfd (diverged trial) fails the comparison.
        if (mfd < tm.beta) {
            ++s.n_within_bound;
        }
        if (std::isfinite(mfd)) {
            s.mfd_max = std::max(s.mfd_max, mfd);
        }
    }
    s.cp_lower = clopper_pearson_lower(s.n_tm_trials, s.n_within_bound, tm.alpha_cp);
    s.tm = classify_tm(s, tm);
    return s;
}

bool classify_tm(const NodeStats& stats, const TmConfig& tm)
{
    if (stats.n_tm_trials == 0) {
        throw ConfigError("node " + std::to_string(stats.node) + " has no troublemaker trials");
    }
    return clopper_pearson_lower(stats.n_tm_trials, stats.n_within_bound, tm.alpha_cp) < 1.0 - tm.gamma;
}

namespace {

struct Job {
    std::size_t node;
    std::size_t trial;
    bool supplementary;
};

void run_jobs(const PowerGrid& grid, std::span<const double> fixed_point, const SyncCertificate* certificate,
              const EstimationConfig& cfg, std::span<const Job> jobs, std::vector<TrialOutcome>& out)
{
    out.assign(jobs.size(), TrialOutcome{});
    const PerturbationSpec tm_spec = PerturbationSpec::tm();
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t k) {
        const Job& job = jobs[k];
        const PerturbationSpec& spec = job.supplementary ? tm_spec : cfg.perturbation;
        const std::uint64_t seed =
            trial_seed(cfg.master_seed, cfg.grid_id, job.node, job.trial, job.supplementary ? 1 : 0);
        TrialOutcome& o = out[k];
        o.node = job.node;
        o.trial = job.trial;
        o.supplementary = job.supplementary;
        o.perturbation = draw_perturbation(spec, seed);
        const GridState initial = sample_perturbation(job.node, spec, fixed_point, seed);
        const auto start = std::chrono::steady_clock::now();
        o.result = integrate(grid, cfg.swing, initial, cfg.integrator, {}, certificate);
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cfg.on_trial) {
            cfg.on_trial(o);
        }
        o.result.final_state = GridState{};
    });
}

}  // namespace

std::vector<NodeStats> estimate_grid(const PowerGrid& grid, const EstimationConfig& cfg)
{
    cfg.validate();
    const auto fixed_point = find_fixed_point(grid, cfg.swing);
    return estimate_grid(grid, fixed_point, cfg);
}

std::vector<NodeStats> estimate_grid(const PowerGrid& grid, std::span<const double> fixed_point,
                                     const EstimationConfig& cfg)
{
    cfg.validate();
    const std::size_t n = grid.size();
    if (fixed_point.size() != n) {
        throw DimensionError("fixed point has " + std::to_string(fixed_point.size()) + " entries for " +
                             std::to_string(n) + " nodes");
    }
    SyncCertificate certificate;
    if (cfg.certified_exit) {
        certificate = SyncCertificate(grid, cfg.swing, fixed_point);
    }
    const SyncCertificate* cert = cfg.certified_exit ? &certificate : nullptr;

    std::vector<Job> jobs;
    jobs.reserve(n * cfg.trials);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            jobs.push_back({i, t, false});
        }
    }
    std::vector<TrialOutcome> primary;
    run_jobs(grid, fixed_point, cert, cfg, jobs, primary);

    const auto eligible = [](const TrialOutcome& o) { return std::abs(o.perturbation.frequency) <= kTmFrequencyBound; };

    std::vector<Job> extra;
    for (std::size_t i = 0; i < n; ++i) {
        const auto begin = primary.begin() + static_cast<std::ptrdiff_t>(i * cfg.trials);
        const auto count = static_cast<std::size_t>(std::count_if(begin, begin + static_cast<std::ptrdiff_t>(cfg.trials), eligible));
        for (std::size_t t = count; t < cfg.tm.min_tm_trials; ++t) {
            extra.push_back({i, t - count, true});
        }
    }
    std::vector<TrialOutcome> supplementary;
    if (!extra.empty()) {
        run_jobs(grid, fixed_point, cert, cfg, extra, supplementary);
    }

    std::vector<NodeStats> stats;
    stats.reserve(n);
    auto extra_it = supplementary.begin();
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const TrialOutcome> snbs(primary.data() + i * cfg.trials, cfg.trials);
        std::vector<TrialOutcome> tm;
        for (const auto& o : snbs) {
            if (eligible(o)) {
                tm.push_back(o);
            }
        }
        while (extra_it != supplementary.end() && extra_it->node == i) {
            tm.push_back(*extra_it++);
        }
        stats.push_back(summarize_node(i, snbs, tm, cfg.tm));
    }
    return stats;
}

NodeStats estimate_node(const PowerGrid& grid, std::span<const double> fixed_point, std::size_t node,
                        const EstimationConfig& cfg)
{
    cfg.validate();
    if (node >= grid.size()) {
        throw DimensionError("node " + std::to_string(node) + " out of range");
    }
    if (fixed_point.size() != grid.size()) {
        throw DimensionError("fixed point size does not match grid");
    }
    SyncCertificate certificate;
    if (cfg.certified_exit) {
        certificate = SyncCertificate(grid, cfg.swing, fixed_point);
    }
    const SyncCertificate* cert = cfg.certified_exit ? &certificate : nullptr;

    std::vector<Job> jobs;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        jobs.push_back({node, t, false});
    }
    std::vector<TrialOutcome> primary;
    run_jobs(grid, fixed_point, cert, cfg, jobs, primary);

    std::vector<TrialOutcome> tm;
    for (const auto& o : primary) {
        if (std::abs(o.perturbation.frequency) <= kTmFrequencyBound) {
            tm.push_back(o);
        }
    }
    if (tm.size() < cfg.tm.min_tm_trials) {
        std::vector<Job> extra;
        for (std::size_t t = 0; t < cfg.tm.min_tm_trials - tm.size(); ++t) {
            extra.push_back({node, t, true});
        }
        std::vector<TrialOutcome> supplementary;
        run_jobs(grid, fixed_point, cert, cfg, extra, supplementary);
        tm.insert(tm.end(), supplementary.begin(), supplementary.end());
    }
    return summarize_node(node, primary, tm, cfg.tm);
}

std::string stats_to_csv(std::span<const NodeStats> stats)
{
    std::ostringstream out;
    out << "node,n_trials,n_stable,snbs,snbs_se,n_tm_trials,n_within_bound,mfd_max,cp_lower,tm\n";
    for (const auto& s : stats) {
        out << s.node << ',' << s.n_trials << ',' << s.n_stable << ',' << format_double(s.snbs) << ','
            << format_double(s.snbs_se) << ',' << s.n_tm_trials << ',' << s.n_within_bound << ','
            << format_double(s.mfd_max) << ',' << format_double(s.cp_lower) << ',' << (s.tm ? 1 : 0) << '\n';
    }
    return out.str();
}

std::vector<NodeStats> read_stats_csv(const std::filesystem::path& path)
{
    const CsvTable table = read_csv(path);
    const std::size_t c_node = table.column("node");
    const std::size_t c_trials = table.column("n_trials");
    const std::size_t c_stable = table.column("n_stable");
    const std::size_t c_snbs = table.column("snbs");
    const std::size_t c_se = table.column("snbs_se");
    const std::size_t c_tm_trials = table.column("n_tm_trials");
    const std::size_t c_within = table.column("n_within_bound");
    const std::size_t c_mfd = table.column("mfd_max");
    const std::size_t c_cp = table.column("cp_lower");
    const std::size_t c_tm = table.column("tm");
    std::vector<NodeStats> stats;
    for (const auto& row : table.rows) {
        NodeStats s;
        s.node = parse_unsigned(row[c_node]);
        s.n_trials = parse_unsigned(row[c_trials]);
        s.n_stable = parse_unsigned(row[c_stable]);
        s.snbs = parse_double(row[c_snbs]);
        s.snbs_se = parse_double(row[c_se]);
        s.n_tm_trials = parse_unsigned(row[c_tm_trials]);
        s.n_within_bound = parse_unsigned(row[c_within]);
        s.mfd_max = parse_double(row[c_mfd]);
        s.cp_lower = parse_double(row[c_cp]);
        s.tm = parse_unsigned(row[c_tm]) != 0;
        stats.push_back(s);
    }
    return stats;
}

}  // namespace gridstab
