#include <benchmark/benchmark.h>

#include "simecs/data.hpp"
#include "simecs/simec.hpp"
#include "simecs/similarity.hpp"

namespace {

void BM_TrainEpochs(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    simecs::SynthLowRank synth = simecs::synth_lowrank(m, 8, 0.1, 5);
    simecs::Matrix s = simecs::center(synth.s_true);
    simecs::TargetSpec target = simecs::TargetSpec::square(s);

    simecs::SimEcConfig cfg;
    cfg.embed_dim = 8;
    cfg.hidden_sizes = {32};
    cfg.lambda_sym = 1.0;
    cfg.epochs = 10;
    cfg.seed = 11;
    for (auto _ : state) {
        auto result = simecs::train(cfg, synth.features, target);
        benchmark::DoNotOptimize(result.report.final_relation_mse);
    }
    state.SetItemsProcessed(state.iterations() * cfg.epochs);
}
BENCHMARK(BM_TrainEpochs)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_BackwardFullBatch(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    simecs::SynthLowRank synth = simecs::synth_lowrank(m, 8, 0.1, 6);
    simecs::Matrix s = simecs::center(synth.s_true);
    simecs::TargetSpec target = simecs::TargetSpec::square(s);

    simecs::NetShape shape;
    shape.input_dim = synth.features.cols();
    shape.hidden = {32};
    shape.embed_dim = 8;
    shape.n_targets = m;
    simecs::NetworkParams params = simecs::init(shape, 3);
    simecs::ObjectiveConfig obj;
    for (auto _ : state) {
        auto grads = simecs::backward(params, synth.features, target, obj);
        benchmark::DoNotOptimize(grads.relation.front().data());
    }
}
BENCHMARK(BM_BackwardFullBatch)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
