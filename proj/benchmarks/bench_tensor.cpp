// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "strokesynth/rng.hpp"
#include "strokesynth/tensor.hpp"

using namespace strokesynth;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
        n *= d;
    }
    Pcg32 rng(seed);
    std::vector<float> vals(static_cast<std::size_t>(n));
    for (float& v : vals) {
        v = rng.uniform(-1.0f, 1.0f);
    }
    return Tensor::from_data(std::move(shape), std::move(vals));
}

void bm_add(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    const Tensor a = random_tensor({n}, 1);
    const Tensor b = random_tensor({n}, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ops::add(a, b));
    }
    state.SetItemsProcessed(state.iterations() * n);
}

void bm_matmul(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    const Tensor a = random_tensor({n, n}, 3);
    const Tensor b = random_tensor({n, n}, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ops::matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * n * n * n);
}

void bm_conv2d(benchmark::State& state) {
    const std::int64_t hw = state.range(0);
    const Tensor img = random_tensor({1, 16, hw, hw}, 5);
    const Tensor w = random_tensor({32, 16, 3, 3}, 6);
    const Tensor bias = random_tensor({32}, 7);
    const ops::Conv2dSpec spec{1, 1, 1, 1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(ops::conv2d(img, w, bias, spec));
    }
}

void bm_reduce_sum(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    const Tensor a = random_tensor({n}, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ops::reduce_sum(a, {0}, false));
    }
    state.SetItemsProcessed(state.iterations() * n);
}

void bm_backward_chain(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    std::vector<float> vals(static_cast<std::size_t>(n * n), 0.25f);
    for (auto _ : state) {
        Tape tape;
        const Tensor a = tape.leaf({n, n}, vals);
        const Tensor b = ops::mul(ops::relu(ops::add(a, 0.5f)), a);
        const Tensor loss = ops::reduce_sum(b, {0, 1}, false);
        benchmark::DoNotOptimize(tape.backward(loss));
    }
}

} // namespace

BENCHMARK(bm_add)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_matmul)->Arg(64)->Arg(256);
BENCHMARK(bm_conv2d)->Arg(32)->Arg(112);
BENCHMARK(bm_reduce_sum)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_backward_chain)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
