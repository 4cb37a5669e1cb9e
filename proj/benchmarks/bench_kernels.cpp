// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <benchmark/benchmark.h>

#include "finclass/nn_ops.hpp"
#include "finclass/rng.hpp"

using namespace finclass;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (float& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

// Pointwise expansion at a mid-network resolution: 24 -> 144 channels.
void BM_Conv2DPointwise(benchmark::State& state) {
    const auto extent = static_cast<std::size_t>(state.range(0));
    const Tensor x = random_tensor({extent, extent, 24}, 1);
    nn::Conv2DSpec spec;
    spec.in_channels = 24;
    spec.out_channels = 144;
    spec.weights = random_tensor({1, 1, 24, 144}, 2);
    spec.bias = random_tensor({144}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, spec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(extent * extent * 24 * 144));
}
BENCHMARK(BM_Conv2DPointwise)->Arg(28)->Arg(56);

void BM_Conv2DStem(benchmark::State& state) {
    const Tensor x = random_tensor({224, 224, 3}, 4);
    nn::Conv2DSpec spec;
    spec.kernel_h = spec.kernel_w = 3;
    spec.stride = 2;
    spec.in_channels = 3;
    spec.out_channels = 32;
    spec.weights = random_tensor({3, 3, 3, 32}, 5);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, spec));
}
BENCHMARK(BM_Conv2DStem);

void BM_Depthwise3x3(benchmark::State& state) {
    const auto extent = static_cast<std::size_t>(state.range(0));
    const auto stride = static_cast<std::size_t>(state.range(1));
    const Tensor x = random_tensor({extent, extent, 144}, 6);
    const Tensor k = random_tensor({3, 3, 144}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(nn::depthwise_conv2d(x, k, stride, nn::Padding::same));
}
BENCHMARK(BM_Depthwise3x3)->Args({56, 1})->Args({56, 2})->Args({28, 1});

void BM_Dense(benchmark::State& state) {
    const Tensor x = random_tensor({1280}, 8);
    const Tensor w = random_tensor({128, 1280}, 9);
    const Tensor b = random_tensor({128}, 10);
    for (auto _ : state) benchmark::DoNotOptimize(nn::dense(x, w, b));
}
BENCHMARK(BM_Dense);

void BM_Softmax(benchmark::State& state) {
    const Tensor z = random_tensor({9}, 11);
    for (auto _ : state) benchmark::DoNotOptimize(nn::softmax(z));
}
BENCHMARK(BM_Softmax);

}  // namespace
