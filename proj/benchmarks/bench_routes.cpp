#include <benchmark/benchmark.h>

#include "faim/pipeline.hpp"
#include "faim/synth.hpp"

namespace {

faim::EmbeddingBundle route_world(int n_identities) {
    faim::WorldConfig config;
    config.n_identities = n_identities;
    config.clothes_per_identity = 2;
    config.samples_per_clothes = 5;
    config.dims = {128, 128, 128};
    config.degrade_fraction = 0.3;
    config.degrade_strength = 0.6;
    config.seed = 42;
    return faim::generate_world(config).first;
}

void BM_RerankKr(benchmark::State& state) {
    const auto bundle = route_world(static_cast<int>(state.range(0)));
    faim::RerankOptions opts;
    opts.mode = faim::ImMode::KReciprocal;
    for (auto _ : state) {
        auto out = faim::rerank(bundle, opts);
        benchmark::DoNotOptimize(out.d_star.values.data());
    }
}
BENCHMARK(BM_RerankKr)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_RerankGnn(benchmark::State& state) {
    const auto bundle = route_world(static_cast<int>(state.range(0)));
    faim::RerankOptions opts;
    opts.mode = faim::ImMode::Gnn;
    for (auto _ : state) {
        auto out = faim::rerank(bundle, opts);
        benchmark::DoNotOptimize(out.d_star.values.data());
    }
}
BENCHMARK(BM_RerankGnn)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
