// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "strokesynth/losses.hpp"
#include "strokesynth/rng.hpp"
#include "strokesynth/tensor.hpp"

using namespace strokesynth;

namespace {

std::vector<float> random_values(std::int64_t n, std::uint64_t seed) {
    Pcg32 rng(seed);
    std::vector<float> vals(static_cast<std::size_t>(n));
    for (float& v : vals) {
        v = rng.uniform(-1.0f, 1.0f);
    }
    return vals;
}

void bm_remd_forward(benchmark::State& state) {
    const std::int64_t m = state.range(0);
    const std::int64_t c = state.range(1);
    const Tensor a = Tensor::from_data({m, c}, random_values(m * c, 1));
    const Tensor b = Tensor::from_data({m, c}, random_values(m * c, 2));
    for (auto _ : state) {
        benchmark::DoNotOptimize(relaxed_emd(a, b));
    }
}

void bm_remd_backward(benchmark::State& state) {
    const std::int64_t m = state.range(0);
    const std::int64_t c = state.range(1);
    const std::vector<float> av = random_values(m * c, 1);
    const std::vector<float> bv = random_values(m * c, 2);
    for (auto _ : state) {
        Tape tape;
        const Tensor a = tape.leaf({m, c}, av);
        const Tensor b = tape.leaf({m, c}, bv);
        benchmark::DoNotOptimize(tape.backward(relaxed_emd(a, b)));
    }
}

void bm_cosine(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    const Tensor a = Tensor::from_data({n}, random_values(n, 3));
    const Tensor b = Tensor::from_data({n}, random_values(n, 4));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cosine_similarity(a, b));
    }
}

} // namespace

BENCHMARK(bm_remd_forward)->Args({256, 64})->Args({1024, 128});
BENCHMARK(bm_remd_backward)->Args({256, 64})->Args({1024, 128});
BENCHMARK(bm_cosine)->Arg(64)->Arg(512);
