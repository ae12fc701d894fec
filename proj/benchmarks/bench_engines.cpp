#include "bifread/bifurcation.hpp"
#include "bifread/fock.hpp"
#include "bifread/moments.hpp"
#include "bifread/noise.hpp"
#include "bifread/trajectory.hpp"

#include <benchmark/benchmark.h>

using namespace bifread;

namespace {

PhysicalParams pitchfork() {
    PhysicalParams p;
    p.omega = 0.065;
    p.gamma = 0.25;
    p.gains = {0.05, 0.5, 0.1};
    return p;
}

void BM_MomentStep(benchmark::State& state) {
    const Oscillator osc{0.065, 0.25, 1.0};
    GaussianMoments m;
    WienerSource w({1, 0}, 0, 0.02);
    for (auto _ : state) {
        m = step_moments(m, osc, 0.01, w.next(), 0.02).moments;
        benchmark::DoNotOptimize(m);
    }
}
BENCHMARK(BM_MomentStep);

void BM_FixedPoints(benchmark::State& state) {
    const FeedbackGains k{0.05, 0.5, 0.05};
    for (auto _ : state) benchmark::DoNotOptimize(fixed_points(0.065, 0.25, k));
}
BENCHMARK(BM_FixedPoints);

void BM_Trajectory(benchmark::State& state) {
    OscillatorRun run;
    run.params = pitchfork();
    run.integration = {0.02, 200.0, 50, 10};
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_trajectory(run, {1, i++}));
    state.SetItemsProcessed(state.iterations() * run.integration.step_count());
}
BENCHMARK(BM_Trajectory)->Unit(benchmark::kMillisecond);

void BM_SmeStep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto ops = FockOperators::build(n, false);
    const auto h = build_hamiltonian({FockMode::single, 0.065}, n);
    FockDensity s = make_density({1.0, 0.5, 0.5, 0.5, 0.0}, n);
    WienerSource w({1, 0}, 0, 0.02);
    for (auto _ : state) {
        s = sme_step(s, ops, h.at(0.01), 0.25, 1.0, w.next(), 0.02).state;
        benchmark::DoNotOptimize(s.rho.data());
    }
}
BENCHMARK(BM_SmeStep)->Arg(40)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
