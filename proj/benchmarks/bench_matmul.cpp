#include <benchmark/benchmark.h>

#include "simecs/matrix.hpp"
#include "simecs/rng.hpp"

namespace {

simecs::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    simecs::Rng rng(seed);
    simecs::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    simecs::Matrix a = random_matrix(n, n, 1);
    simecs::Matrix b = random_matrix(n, n, 2);
    for (auto _ : state) {
        simecs::Matrix c = simecs::matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);

void BM_MatmulBt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    simecs::Matrix a = random_matrix(n, n, 3);
    simecs::Matrix b = random_matrix(n, n, 4);
    for (auto _ : state) {
        simecs::Matrix c = simecs::matmul_bt(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_MatmulBt)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
