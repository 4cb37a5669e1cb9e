// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <benchmark/benchmark.h>

#include "finclass/head.hpp"
#include "finclass/rng.hpp"

using namespace finclass;

namespace {

struct Batch {
    Tensor x, y;
};

Batch random_batch(std::size_t batch, std::size_t features, std::size_t classes) {
    Rng rng(3);
    Batch b{Tensor({batch, features}), Tensor({batch, classes})};
    for (float& v : b.x.data()) v = static_cast<float>(rng.uniform(0.0, 6.0));
    for (std::size_t n = 0; n < batch; ++n) b.y[n * classes + rng.index(classes)] = 1.0f;
    return b;
}

void BM_HeadGradients(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const HeadParams head = HeadParams::glorot(1280, kDefaultHiddenWidth, 9, 1);
    const Batch b = random_batch(batch, 1280, 9);
    for (auto _ : state) benchmark::DoNotOptimize(head_gradients(head, b.x, b.y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HeadGradients)->Arg(1)->Arg(32);

void BM_TrainStep(benchmark::State& state) {
    HeadParams head = HeadParams::glorot(1280, kDefaultHiddenWidth, 9, 1);
    AdamState adam = AdamState::zeros_like(head);
    const Batch b = random_batch(32, 1280, 9);
    for (auto _ : state) {
        const auto g = head_gradients(head, b.x, b.y);
        adam_step(head, g.gradients, adam, {});
    }
}
BENCHMARK(BM_TrainStep);

void BM_HeadForward(benchmark::State& state) {
    const HeadParams head = HeadParams::glorot(1280, kDefaultHiddenWidth, 9, 1);
    const Batch b = random_batch(1, 1280, 9);
    const Tensor f({1280}, std::vector<float>(b.x.data().begin(), b.x.data().end()));
    for (auto _ : state) benchmark::DoNotOptimize(head_forward(head, f));
}
BENCHMARK(BM_HeadForward);

}  // namespace
