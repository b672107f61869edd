#include "oracles.hpp"

#include <gridstab/binomial.hpp>
#include <gridstab/error.hpp>
#include <gridstab/stability.hpp>
#include <gridstab/topology.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

using namespace gridstab;

namespace {

PowerGrid two_nodes()
{
    return PowerGrid(2, {{0, 1}}, {1.0, -1.0});
}

PowerGrid random_grid(std::size_t n, std::uint64_t seed)
{
    GrowthParams p;
    p.n = n;
    p.seed = seed;
    return assign_injections(generate_topology(p), seed + 1);
}

}  // namespace

TEST(Perturbation, CollapsedSpecReturnsFixedPoint)
{
    PerturbationSpec spec;
    spec.phase = {0.0, 0.0};
    spec.frequency = {0.0, 0.0};
    const std::vector<double> phi{0.0, -0.2, 0.4};
    const GridState s = sample_perturbation(1, spec, phi, 123);
    EXPECT_EQ(s.phase, phi);
    EXPECT_EQ(s.frequency, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Perturbation, OnlyTheChosenNodeMoves)
{
    const std::vector<double> phi{0.0, -0.2, 0.4};
    const GridState s = sample_perturbation(2, PerturbationSpec::snbs(), phi, 5);
    EXPECT_EQ(s.phase[0], 0.0);
    EXPECT_EQ(s.phase[1], -0.2);
    EXPECT_EQ(s.frequency[0], 0.0);
    EXPECT_EQ(s.frequency[1], 0.0);
    EXPECT_THROW(sample_perturbation(3, PerturbationSpec::snbs(), phi, 5), DimensionError);
}

TEST(Perturbation, SnbsDrawsAreUniform)
{
    double sum = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double phase_sum = 0.0;
    for (std::size_t t = 0; t < 100000; ++t) {
        const Perturbation p = draw_perturbation(PerturbationSpec::snbs(), trial_seed(1, 2, 3, t));
        sum += p.frequency;
        phase_sum += p.phase;
        lo = std::min(lo, p.frequency);
        hi = std::max(hi, p.frequency);
        ASSERT_GE(p.phase, -std::numbers::pi);
        ASSERT_LE(p.phase, std::numbers::pi);
    }
    EXPECT_NEAR(sum / 100000.0, 0.0, 0.15);
    EXPECT_NEAR(phase_sum / 100000.0, 0.0, 0.03);
    EXPECT_GE(lo, -15.0);
    EXPECT_LE(hi, 15.0);
    EXPECT_LT(lo, -14.9);
    EXPECT_GT(hi, 14.9);
}

TEST(Perturbation, TmSpecRange)
{
    for (std::size_t t = 0; t < 10000; ++t) {
        const Perturbation p = draw_perturbation(PerturbationSpec::tm(), trial_seed(1, 2, 3, t, 1));
        ASSERT_LE(std::abs(p.frequency), 2.5);
        ASSERT_LT(p.phase, std::numbers::pi);
    }
}

TEST(Perturbation, SameCoordinatesSameStateAcrossThreads)
{
    const std::vector<double> phi{0.0, 0.1, 0.2, 0.3};
    GridState a;
    GridState b;
    std::thread t1([&] { a = sample_perturbation(2, PerturbationSpec::snbs(), phi, trial_seed(9, 4, 2, 17)); });
    std::thread t2([&] { b = sample_perturbation(2, PerturbationSpec::snbs(), phi, trial_seed(9, 4, 2, 17)); });
    t1.join();
    t2.join();
    EXPECT_EQ(a.phase, b.phase);
    EXPECT_EQ(a.frequency, b.frequency);
}

TEST(Perturbation, SpecValidation)
{
    PerturbationSpec wide = PerturbationSpec::snbs();
    wide.frequency = {-16.0, 16.0};
    EXPECT_THROW(wide.validate(), ConfigError);
    PerturbationSpec tm = PerturbationSpec::tm();
    tm.frequency = {-3.0, 3.0};
    EXPECT_THROW(tm.validate(), ConfigError);
    EXPECT_NO_THROW(PerturbationSpec::tm().validate());
}

TEST(ClassifyTm, GammaThresholds)
{
    NodeStats s;
    s.n_tm_trials = 1000;
    s.n_within_bound = 1000;
    TmConfig tm;
    tm.gamma = 0.01;
    EXPECT_FALSE(classify_tm(s, tm));
    tm.gamma = 0.001;
    EXPECT_TRUE(classify_tm(s, tm));
    s.n_within_bound = 0;
    tm.gamma = 0.999;
    EXPECT_TRUE(classify_tm(s, tm));
    s.n_tm_trials = 0;
    EXPECT_THROW(classify_tm(s, tm), ConfigError);
}

TEST(Estimate, StrongCouplingIsAlwaysStable)
{
    EstimationConfig cfg;
    cfg.swing.coupling = 200.0;
    cfg.trials = 40;
    const auto stats = estimate_grid(two_nodes(), cfg);
    for (const auto& s : stats) {
        EXPECT_EQ(s.snbs, 1.0);
        EXPECT_EQ(s.snbs_se, 0.0);
        EXPECT_EQ(s.n_stable, s.n_trials);
    }
}

TEST(Estimate, SnbsAgreesWithRk4Oracle)
{
    EstimationConfig cfg;
    cfg.trials = 2000;
    cfg.master_seed = 31;
    const PowerGrid g = two_nodes();
    const auto phi = find_fixed_point(g, cfg.swing);
    const NodeStats stats = estimate_node(g, phi, 0, cfg);

    std::size_t oracle_stable = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const GridState initial = sample_perturbation(0, cfg.perturbation, phi, trial_seed(31, 0, 0, t));
        const auto r = oracle::rk4(2, {{0, 1}}, {1.0, -1.0}, 1.0, 0.1, 9.0, initial.phase, initial.frequency, 2e-3,
                                   500.0);
        oracle_stable += std::abs(r.frequency[0]) < 0.1 && std::abs(r.frequency[1]) < 0.1 ? 1 : 0;
    }
    const double oracle_snbs = static_cast<double>(oracle_stable) / static_cast<double>(cfg.trials);
    EXPECT_GT(stats.snbs, 0.05);
    EXPECT_LT(stats.snbs, 0.95);
    EXPECT_LE(std::abs(stats.snbs - oracle_snbs), 3.0 * stats.snbs_se);
}

TEST(Estimate, TmTrialsAreTheLowFrequencySubset)
{
    EstimationConfig cfg;
    cfg.trials = 60;
    cfg.master_seed = 4;
    cfg.grid_id = 2;
    cfg.tm.min_tm_trials = 1;
    const PowerGrid g = random_grid(10, 40);
    const auto phi = find_fixed_point(g, cfg.swing);
    const NodeStats s = estimate_node(g, phi, 3, cfg);
    std::size_t expected = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        expected += std::abs(draw_perturbation(cfg.perturbation, trial_seed(4, 2, 3, t)).frequency) <= 2.5 ? 1 : 0;
    }
    ASSERT_GE(expected, 1u);
    EXPECT_EQ(s.n_tm_trials, expected);
    EXPECT_EQ(s.n_trials, 60u);
    EXPECT_LE(s.n_within_bound, s.n_tm_trials);
    EXPECT_LE(s.cp_lower, static_cast<double>(s.n_within_bound) / static_cast<double>(s.n_tm_trials));
    EXPECT_EQ(s.tm, classify_tm(s, cfg.tm));
}

TEST(Estimate, SupplementaryTrialsReachMinimum)
{
    EstimationConfig cfg;
    cfg.trials = 10;
    cfg.tm.min_tm_trials = 25;
    cfg.integrator.t_end = 50.0;
    const auto stats = estimate_grid(two_nodes(), cfg);
    for (const auto& s : stats) {
        EXPECT_EQ(s.n_tm_trials, 25u);
        EXPECT_EQ(s.n_trials, 10u);
    }
}

TEST(Estimate, IndependentOfWorkerCount)
{
    EstimationConfig cfg;
    cfg.trials = 15;
    cfg.master_seed = 12;
    cfg.integrator.t_end = 100.0;
    const PowerGrid g = random_grid(8, 3);
    cfg.workers = 1;
    const auto one = estimate_grid(g, cfg);
    cfg.workers = 4;
    const auto four = estimate_grid(g, cfg);
    EXPECT_EQ(one, four);
    EXPECT_EQ(stats_to_csv(one), stats_to_csv(four));
}

TEST(Estimate, MfdMaxIsMonotoneInNestedTrialSets)
{
    EstimationConfig cfg;
    cfg.master_seed = 8;
    cfg.integrator.t_end = 100.0;
    const PowerGrid g = random_grid(6, 9);
    const auto phi = find_fixed_point(g, cfg.swing);
    double last = 0.0;
    for (std::size_t trials : {20u, 40u, 80u}) {
        cfg.trials = trials;
        const NodeStats s = estimate_node(g, phi, 1, cfg);
        EXPECT_GE(s.mfd_max, last);
        last = s.mfd_max;
    }
}

TEST(Summarize, DivergedTrialsFailTheBound)
{
    TrialOutcome ok;
    ok.result.converged = true;
    ok.result.mfd = 3.0;
    TrialOutcome diverged;
    diverged.result.converged = false;
    diverged.result.status = TrialStatus::diverged;
    diverged.result.mfd = std::numeric_limits<double>::infinity();
    const std::vector<TrialOutcome> all{ok, diverged, ok};
    const NodeStats s = summarize_node(0, all, all, TmConfig{});
    EXPECT_EQ(s.n_stable, 2u);
    EXPECT_EQ(s.n_within_bound, 2u);
    EXPECT_EQ(s.mfd_max, 3.0);
    EXPECT_TRUE(s.tm);
}

TEST(StatsCsv, RoundTrip)
{
    NodeStats s;
    s.node = 0;
    s.n_trials = 10;
    s.n_stable = 7;
    s.snbs = 0.7;
    s.snbs_se = bernoulli_se(10, 7);
    s.n_tm_trials = 3;
    s.n_within_bound = 3;
    s.mfd_max = 4.25;
    s.cp_lower = clopper_pearson_lower(3, 3, 0.001);
    s.tm = true;
    const std::vector<NodeStats> stats{s};
    const auto path = std::filesystem::temp_directory_path() / "gridstab_stats.csv";
    {
        std::ofstream out(path);
        out << stats_to_csv(stats);
    }
    EXPECT_EQ(read_stats_csv(path), stats);
    std::filesystem::remove(path);
}
