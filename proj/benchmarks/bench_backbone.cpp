// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <benchmark/benchmark.h>

#include "finclass/backbone.hpp"
#include "finclass/imaging.hpp"
#include "finclass/synthetic.hpp"

using namespace finclass;

namespace {

struct Backbone {
    ModelGraph graph = build_backbone();
    WeightStore folded = attach_weights(graph, random_backbone_weights(graph));
};

const Backbone& backbone() {
    static const Backbone b;
    return b;
}

void BM_BackboneForward(benchmark::State& state) {
    const auto& b = backbone();
    const Tensor input = prepare_input(synthetic_image(0, 1, 224, 224), 224);
    for (auto _ : state) benchmark::DoNotOptimize(extract_features(b.graph, b.folded, input));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BackboneForward)->Unit(benchmark::kMillisecond);

void BM_PrepareInput(benchmark::State& state) {
    const RasterImage img = synthetic_image(3, 2, 640, 480);
    for (auto _ : state) benchmark::DoNotOptimize(prepare_input(img, 224));
}
BENCHMARK(BM_PrepareInput)->Unit(benchmark::kMicrosecond);

void BM_DecodePng(benchmark::State& state) {
    const auto bytes = encode_png(synthetic_image(5, 3, 640, 480));
    for (auto _ : state) benchmark::DoNotOptimize(decode_image(bytes));
}
BENCHMARK(BM_DecodePng)->Unit(benchmark::kMicrosecond);

void BM_AttachWeights(benchmark::State& state) {
    const ModelGraph graph = build_backbone();
    const WeightStore raw = random_backbone_weights(graph);
    for (auto _ : state) benchmark::DoNotOptimize(attach_weights(graph, raw));
}
BENCHMARK(BM_AttachWeights)->Unit(benchmark::kMillisecond);

}  // namespace
