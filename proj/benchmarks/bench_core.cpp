#include <gridstab/binomial.hpp>
#include <gridstab/dynamics.hpp>
#include <gridstab/features.hpp>
#include <gridstab/ml/model.hpp>
#include <gridstab/stability.hpp>
#include <gridstab/topology.hpp>

#include <benchmark/benchmark.h>

using namespace gridstab;

namespace {

PowerGrid grid_of(std::size_t n)
{
    GrowthParams p;
    p.n = n;
    p.seed = 42;
    return assign_injections(generate_topology(p), 43);
}

void BM_Rhs(benchmark::State& state)
{
    const PowerGrid g = grid_of(static_cast<std::size_t>(state.range(0)));
    GridState s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        s.phase[i] = 0.01 * static_cast<double>(i);
    }
    std::vector<double> dphi;
    std::vector<double> domega;
    for (auto _ : state) {
        rhs(s, g, SwingParams{}, dphi, domega);
        benchmark::DoNotOptimize(domega.data());
    }
}
BENCHMARK(BM_Rhs)->Arg(20)->Arg(100)->Arg(1910);

void BM_Trial(benchmark::State& state)
{
    const PowerGrid g = grid_of(20);
    const SwingParams params;
    const auto phi = find_fixed_point(g, params);
    const bool certified = state.range(0) != 0;
    const SyncCertificate certificate(g, params, phi);
    std::size_t trial = 0;
    for (auto _ : state) {
        const GridState initial =
            sample_perturbation(trial % 20, PerturbationSpec::snbs(), phi, trial_seed(1, 0, trial % 20, trial));
        ++trial;
        benchmark::DoNotOptimize(
            integrate(g, params, initial, IntegratorConfig{}, {}, certified ? &certificate : nullptr).mfd);
    }
}
BENCHMARK(BM_Trial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FixedPoint(benchmark::State& state)
{
    const PowerGrid g = grid_of(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(find_fixed_point(g, SwingParams{}).data());
    }
}
BENCHMARK(BM_FixedPoint)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_NodeFeatures(benchmark::State& state)
{
    const PowerGrid g = grid_of(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(node_features(g).data());
    }
}
BENCHMARK(BM_NodeFeatures)->Arg(20)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_ClopperPearson(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    std::size_t s = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(clopper_pearson_lower(n, n - (s++ % 5), 0.001));
    }
}
BENCHMARK(BM_ClopperPearson)->Arg(100)->Arg(10000);

void BM_GcnForward(benchmark::State& state)
{
    const PowerGrid g = grid_of(static_cast<std::size_t>(state.range(0)));
    ml::ModelSpec spec;
    spec.kind = ml::ModelKind::gcn;
    spec.input_dim = 2;
    spec.hidden = {32, 32, 32};
    const ml::Model model = ml::make_model(spec);
    const auto adjacency = ml::normalized_adjacency(g);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(g.size()), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ml::gcn_forward(model, adjacency, x).outputs.back().data());
    }
}
BENCHMARK(BM_GcnForward)->Arg(20)->Arg(1910);

}  // namespace
BENCHMARK_MAIN();
