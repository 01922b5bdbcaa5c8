// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "dirne/extractor.hpp"
#include "dirne/protocol_sim.hpp"

namespace {

dirne::BitVector random_bits(std::uint64_t n, std::uint64_t seed) {
    dirne::BitVector v(n);
    std::mt19937_64 rng(seed);
    for (auto& w : v.words()) w = rng();
    v.resize(n);
    return v;
}

dirne::ToeplitzJob job_for(std::uint64_t n, std::uint64_t m, std::uint64_t block) {
    dirne::ToeplitzJob job;
    job.n_bits = n;
    job.m_bits = m;
    job.block_len = block;
    job.seed = random_bits(m + n - 1, 7);
    return job;
}

void BM_ToeplitzNaive(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    const auto job = job_for(n, n / 4, n);
    const auto input = random_bits(n, 11);
    for (auto _ : state) benchmark::DoNotOptimize(dirne::toeplitz_naive(job.seed, input, job.m_bits));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ToeplitzNaive)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

void toeplitz_fft(benchmark::State& state, dirne::Execution exec) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    const auto job = job_for(n, n / 4, std::min<std::uint64_t>(n, 1 << 16));
    const auto input = random_bits(n, 11);
    for (auto _ : state) benchmark::DoNotOptimize(dirne::toeplitz_fft(job, input, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
void BM_ToeplitzFftSerial(benchmark::State& s) { toeplitz_fft(s, dirne::Execution::serial); }
void BM_ToeplitzFftParallel(benchmark::State& s) { toeplitz_fft(s, dirne::Execution::parallel); }
BENCHMARK(BM_ToeplitzFftSerial)->Arg(1 << 14)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ToeplitzFftParallel)->Arg(1 << 14)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

dirne::SimulationParams sim_params(std::uint64_t n) {
    dirne::SimulationParams p;
    p.n = n;
    p.gamma = 1e-2;
    p.omega_exp = 0.76;
    p.delta = 0.005;
    p.model = dirne::BernoulliModel{0.76};
    p.seed = 3;
    return p;
}

void BM_SimulateSerial(benchmark::State& state) {
    const auto p = sim_params(static_cast<std::uint64_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(dirne::run_protocol_serial(p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
void BM_SimulateParallel(benchmark::State& state) {
    const auto p = sim_params(static_cast<std::uint64_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(dirne::run_protocol(p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateSerial)->Arg(1 << 22)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Arg(1 << 22)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
