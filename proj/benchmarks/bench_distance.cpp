#include <benchmark/benchmark.h>

#include "faim/distance.hpp"
#include "faim/synth.hpp"

namespace {

faim::EmbeddingBundle bench_world(int n_identities, int dim) {
    faim::WorldConfig config;
    config.n_identities = n_identities;
    config.clothes_per_identity = 2;
    config.samples_per_clothes = 5;
    config.dims = {dim, dim, dim};
    config.seed = 42;
    return faim::normalize_bundle(faim::generate_world(config).first);
}

void BM_CosineMatrix(benchmark::State& state) {
    const auto bundle = bench_world(static_cast<int>(state.range(0)), 128);
    const auto view = faim::space_view(bundle, faim::Space::Original);
    for (auto _ : state) {
        auto d = faim::cosine_distance_matrix(view, view);
        benchmark::DoNotOptimize(d.values.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(view.count) * view.count);
}
BENCHMARK(BM_CosineMatrix)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_TopK(benchmark::State& state) {
    const auto bundle = bench_world(static_cast<int>(state.range(0)), 128);
    const auto view = faim::space_view(bundle, faim::Space::Original);
    const auto d = faim::cosine_distance_matrix(view, view);
    for (auto _ : state) {
        auto nn = faim::top_k_neighbors(d, 20, true);
        benchmark::DoNotOptimize(nn.data());
    }
}
BENCHMARK(BM_TopK)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
