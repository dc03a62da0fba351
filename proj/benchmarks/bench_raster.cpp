// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>

#include <benchmark/benchmark.h>

#include "strokesynth/raster.hpp"
#include "strokesynth/scene.hpp"
#include "strokesynth/tensor.hpp"

using namespace strokesynth;

namespace {

void bm_rasterize_forward(benchmark::State& state) {
    const std::int64_t strokes = state.range(0);
    const std::int64_t side = state.range(1);
    const Drawing d = init_random(strokes, side, side, 42);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize(d, 1.0f, 16));
    }
    state.SetItemsProcessed(state.iterations() * side * side);
}

void bm_rasterize_backward(benchmark::State& state) {
    const std::int64_t strokes = state.range(0);
    const std::int64_t side = state.range(1);
    Drawing d = init_random(strokes, side, side, 42);
    RasterSettings rs;
    rs.width = side;
    rs.height = side;
    rs.segments = 16;
    for (auto _ : state) {
        Tape tape;
        const ParamGroups pg = param_groups(d, &tape);
        const Tensor img = rasterize(pg, rs);
        const Tensor loss = ops::reduce_sum(img);
        benchmark::DoNotOptimize(tape.backward(loss));
    }
}

} // namespace

BENCHMARK(bm_rasterize_forward)
    ->Args({16, 128})
    ->Args({64, 128})
    ->Args({256, 224})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rasterize_backward)
    ->Args({16, 128})
    ->Args({64, 128})
    ->Args({256, 224})
    ->Unit(benchmark::kMillisecond);
