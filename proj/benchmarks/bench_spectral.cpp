#include <benchmark/benchmark.h>

#include "simecs/rng.hpp"
#include "simecs/similarity.hpp"
#include "simecs/spectral.hpp"

namespace {

simecs::Matrix random_kernel(std::size_t m, std::uint64_t seed) {
    simecs::Rng rng(seed);
    simecs::Matrix x(m, 16);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.gaussian();
    return simecs::center(simecs::rbf_kernel(x, 0.1));
}

void BM_EigTopD(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    simecs::Matrix s = random_kernel(m, 7);
    for (auto _ : state) {
        auto eig = simecs::eig_sym_topd(s, d, simecs::EigCriterion::LargestPositive);
        benchmark::DoNotOptimize(eig.eigenvalues.data());
    }
}
BENCHMARK(BM_EigTopD)->Args({128, 10})->Args({400, 10})->Args({400, 40});

void BM_KpcaEmbed(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    simecs::Matrix s = random_kernel(m, 8);
    for (auto _ : state) {
        simecs::Matrix y = simecs::kpca_embed(s, 10);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_KpcaEmbed)->Arg(128)->Arg(400);

}  // namespace
