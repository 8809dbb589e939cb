#include "tcnet/channel.hpp"
#include "tcnet/core.hpp"
#include "tcnet/kernels.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace tcnet;

namespace {

struct Fixture {
    Matrix rho;
    std::vector<kernels::PairMix> mixes;
    std::vector<kernels::WeightedUnitary> dense;
    Vector phases;
};

Fixture make_fixture(int n) {
    Fixture f;
    f.rho = make_initial_state({StateKind::HaarRandomPure, 3, 0, {0, 1}, std::nullopt}, n).matrix();
    const auto pairs = site_pairs(n);
    const double p = 0.8 / static_cast<double>(pairs.size());
    for (auto [m, k] : pairs) f.mixes.push_back(kernels::make_pair_mix(m, k, n, p, 1.0));
    const Matrix h = build_hamiltonian({Family::Ising, 0, 0, 0.4, 0.1, 0, n});
    f.phases = hermitian_exp_i(h, 1.0).diagonal();

    ChannelSpec spec;
    const Channel ch = build_channel(build_hamiltonian({Family::TFI, 0, 0, 0.4, 0, 0.1, n}), spec);
    for (std::size_t k = 0; k < ch.term_count(); ++k) f.dense.push_back({ch.probability(k), ch.unitary(k)});
    return f;
}

void BM_PairMixSerial(benchmark::State& state) {
    const auto f = make_fixture(static_cast<int>(state.range(0)));
    Matrix out(f.rho.rows(), f.rho.cols());
    for (auto _ : state) {
        kernels::mix_pairs_serial(f.rho, out, 0.2, f.mixes, f.phases);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_PairMixParallel(benchmark::State& state) {
    const auto f = make_fixture(static_cast<int>(state.range(0)));
    Matrix out(f.rho.rows(), f.rho.cols());
    for (auto _ : state) {
        kernels::mix_pairs_parallel(f.rho, out, 0.2, f.mixes, f.phases);
        benchmark::DoNotOptimize(out.data());
    }
    state.counters["threads"] = kernels::max_threads();
}

void BM_DenseSerial(benchmark::State& state) {
    const auto f = make_fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::dense_mixture_serial(f.rho, f.dense));
}

void BM_DenseParallel(benchmark::State& state) {
    const auto f = make_fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::dense_mixture_parallel(f.rho, f.dense));
    state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_PairMixSerial)->DenseRange(4, 10, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PairMixParallel)->DenseRange(4, 10, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DenseSerial)->DenseRange(3, 7, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DenseParallel)->DenseRange(3, 7, 2)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
