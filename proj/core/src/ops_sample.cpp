// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "strokesynth/errors.hpp"
#include "strokesynth/tensor.hpp"
#include "tensor_detail.hpp"

namespace strokesynth::ops {

namespace {

// One bilinear tap: four neighbour indices and weights, plus the local
// derivatives of the sampled value w.r.t. the continuous pixel coordinates.
struct BilinearTap {
    std::int64_t x0, x1, y0, y1;
    float wx1, wy1; // fractional parts; wx0 = 1 - wx1 etc.
    float dpx;      // d(px)/d(gx): half the image extent
    float dpy;
};

} // namespace

Tensor grid_sample_bilinear(const Tensor& img, const Tensor& grid) {
    if (img.ndim() != 3) {
        throw ShapeError("grid_sample_bilinear: image must be (C,H,W), got " +
                         shape_str(img.shape()));
    }
    if (grid.ndim() != 3 || grid.dim(2) != 2) {
        throw ShapeError("grid_sample_bilinear: grid must be (H,W,2), got " +
                         shape_str(grid.shape()));
    }
    const std::int64_t C = img.dim(0);
    const std::int64_t H = img.dim(1);
    const std::int64_t W = img.dim(2);
    const std::int64_t Ho = grid.dim(0);
    const std::int64_t Wo = grid.dim(1);

    Tensor y = Tensor::zeros({C, Ho, Wo});
    auto taps = std::make_shared<std::vector<BilinearTap>>(static_cast<std::size_t>(Ho * Wo));
    {
        const float* ip = img.values().data();
        const float* gp = grid.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t o = 0; o < Ho * Wo; ++o) {
            const float gx = gp[o * 2 + 0];
            const float gy = gp[o * 2 + 1];
            // Half-pixel centers: -1 and +1 map to the outer pixel edges.
            const float px = ((gx + 1.0f) * static_cast<float>(W) - 1.0f) * 0.5f;
            const float py = ((gy + 1.0f) * static_cast<float>(H) - 1.0f) * 0.5f;
            const float fx = std::floor(px);
            const float fy = std::floor(py);
            BilinearTap t;
            t.wx1 = px - fx;
            t.wy1 = py - fy;
            // Border handling clamps the four sample indices, so samples past
            // the edge repeat the edge pixel and position gradients fade to
            // zero there naturally.
            t.x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fx), 0, W - 1);
            t.x1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fx) + 1, 0, W - 1);
            t.y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fy), 0, H - 1);
            t.y1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fy) + 1, 0, H - 1);
            t.dpx = static_cast<float>(W) * 0.5f;
            t.dpy = static_cast<float>(H) * 0.5f;
            (*taps)[static_cast<std::size_t>(o)] = t;
            for (std::int64_t c = 0; c < C; ++c) {
                const float* plane = ip + c * H * W;
                const float v00 = plane[t.y0 * W + t.x0];
                const float v01 = plane[t.y0 * W + t.x1];
                const float v10 = plane[t.y1 * W + t.x0];
                const float v11 = plane[t.y1 * W + t.x1];
                const float top = v00 * (1.0f - t.wx1) + v01 * t.wx1;
                const float bot = v10 * (1.0f - t.wx1) + v11 * t.wx1;
                yp[c * Ho * Wo + o] = top * (1.0f - t.wy1) + bot * t.wy1;
            }
        }
    }

    if (Tape* tape = common_tape({&img, &grid})) {
        Tensor ic = img;
        Tensor gc = grid;
        std::vector<int> inputs;
        for (const Tensor* t : {&img, &grid}) {
            if (t->on_tape()) {
                inputs.push_back(t->node());
            }
        }
        tape->record(
            y, std::move(inputs),
            [ic, gc, taps, C, H, W, Ho, Wo](std::span<const float> g, Tape::BackwardCtx& ctx) {
                const float* ip = ic.values().data();
                float* gi = ic.on_tape() ? ctx.grad(ic.node()).data() : nullptr;
                float* gg = gc.on_tape() ? ctx.grad(gc.node()).data() : nullptr;
                for (std::int64_t o = 0; o < Ho * Wo; ++o) {
                    const BilinearTap& t = (*taps)[static_cast<std::size_t>(o)];
                    float dpx_acc = 0.0f;
                    float dpy_acc = 0.0f;
                    for (std::int64_t c = 0; c < C; ++c) {
                        const float go = g[c * Ho * Wo + o];
                        if (go == 0.0f) {
                            continue;
                        }
                        const float* plane = ip + c * H * W;
                        const float v00 = plane[t.y0 * W + t.x0];
                        const float v01 = plane[t.y0 * W + t.x1];
                        const float v10 = plane[t.y1 * W + t.x0];
                        const float v11 = plane[t.y1 * W + t.x1];
                        if (gi != nullptr) {
                            float* gplane = gi + c * H * W;
                            gplane[t.y0 * W + t.x0] += go * (1.0f - t.wx1) * (1.0f - t.wy1);
                            gplane[t.y0 * W + t.x1] += go * t.wx1 * (1.0f - t.wy1);
                            gplane[t.y1 * W + t.x0] += go * (1.0f - t.wx1) * t.wy1;
                            gplane[t.y1 * W + t.x1] += go * t.wx1 * t.wy1;
                        }
                        if (gg != nullptr) {
                            // d(value)/d(px), d(value)/d(py) at the tap.
                            const float dvdx =
                                (v01 - v00) * (1.0f - t.wy1) + (v11 - v10) * t.wy1;
                            const float dvdy =
                                (v10 - v00) * (1.0f - t.wx1) + (v11 - v01) * t.wx1;
                            dpx_acc += go * dvdx;
                            dpy_acc += go * dvdy;
                        }
                    }
                    if (gg != nullptr) {
                        gg[o * 2 + 0] += dpx_acc * t.dpx;
                        gg[o * 2 + 1] += dpy_acc * t.dpy;
                    }
                }
            });
    }
    return y;
}

Tensor gather_hw(const Tensor& map, std::span<const std::int64_t> coords) {
    if (map.ndim() != 3) {
        throw ShapeError("gather_hw: map must be (C,H,W), got " + shape_str(map.shape()));
    }
    const std::int64_t C = map.dim(0);
    const std::int64_t HW = map.dim(1) * map.dim(2);
    const std::int64_t M = static_cast<std::int64_t>(coords.size());
    auto idx = std::make_shared<std::vector<std::int64_t>>(coords.begin(), coords.end());
    for (const std::int64_t i : *idx) {
        if (i < 0 || i >= HW) {
            throw DomainError("gather_hw: flat index " + std::to_string(i) +
                              " outside H*W=" + std::to_string(HW));
        }
    }

    Tensor y = Tensor::zeros({M, C});
    {
        const float* mp = map.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t m = 0; m < M; ++m) {
            const std::int64_t at = (*idx)[static_cast<std::size_t>(m)];
            for (std::int64_t c = 0; c < C; ++c) {
                yp[m * C + c] = mp[c * HW + at];
            }
        }
    }
    if (Tape* tape = common_tape({&map})) {
        Tensor mc = map;
        tape->record(y, {map.node()},
                     [mc, idx, C, HW, M](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         float* gm = ctx.grad(mc.node()).data();
                         for (std::int64_t m = 0; m < M; ++m) {
                             const std::int64_t at = (*idx)[static_cast<std::size_t>(m)];
                             for (std::int64_t c = 0; c < C; ++c) {
                                 gm[c * HW + at] += g[m * C + c];
                             }
                         }
                     });
    }
    return y;
}

} // namespace strokesynth::ops
