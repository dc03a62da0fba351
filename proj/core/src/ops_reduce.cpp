// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>

#include "strokesynth/errors.hpp"
#include "strokesynth/tensor.hpp"
#include "tensor_detail.hpp"

namespace strokesynth::ops {

namespace {

// Shared machinery for sum/mean over an axis set. Each output element owns a
// pairwise accumulator; inputs are visited once in row-major order so the
// result does not depend on threading.
Tensor reduce_sum_impl(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims, bool mean,
                       const char* op) {
    const std::int64_t nd = x.ndim();
    std::vector<bool> reduced(static_cast<std::size_t>(nd), false);
    if (axes.empty()) {
        std::fill(reduced.begin(), reduced.end(), true);
    }
    for (auto& a : axes) {
        a = detail::normalize_axis(a, nd, op);
        if (reduced[static_cast<std::size_t>(a)]) {
            throw ShapeError(std::string(op) + ": duplicate axis " + std::to_string(a));
        }
        reduced[static_cast<std::size_t>(a)] = true;
    }

    Shape out_shape;
    std::int64_t reduce_count = 1;
    for (std::int64_t i = 0; i < nd; ++i) {
        if (reduced[static_cast<std::size_t>(i)]) {
            reduce_count *= x.dim(i);
            if (keepdims) {
                out_shape.push_back(1);
            }
        } else {
            out_shape.push_back(x.dim(i));
        }
    }
    const std::int64_t out_numel = shape_numel(out_shape);

    // Map each input flat index to its output flat index by zeroing reduced
    // coordinates. Precompute per-dimension output strides (0 when reduced).
    const auto in_strides = detail::row_major_strides(x.shape());
    std::vector<std::int64_t> out_strides(static_cast<std::size_t>(nd), 0);
    {
        std::int64_t stride = 1;
        for (std::int64_t i = nd - 1; i >= 0; --i) {
            if (!reduced[static_cast<std::size_t>(i)]) {
                out_strides[static_cast<std::size_t>(i)] = stride;
                stride *= x.dim(i);
            }
        }
    }

    const float inv = reduce_count > 0 ? 1.0f / static_cast<float>(reduce_count) : 0.0f;
    Tensor y = Tensor::zeros(out_shape);
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        std::vector<PairwiseAccumulator> accs(static_cast<std::size_t>(out_numel));
        std::vector<std::int64_t> coord(static_cast<std::size_t>(nd), 0);
        std::int64_t out_off = 0;
        const std::int64_t total = x.numel();
        for (std::int64_t flat = 0; flat < total; ++flat) {
            accs[static_cast<std::size_t>(out_off)].push(xp[flat]);
            for (std::int64_t i = nd - 1; i >= 0; --i) {
                auto& c = coord[static_cast<std::size_t>(i)];
                out_off += out_strides[static_cast<std::size_t>(i)];
                if (++c < x.dim(i)) {
                    break;
                }
                c = 0;
                out_off -= out_strides[static_cast<std::size_t>(i)] * x.dim(i);
            }
        }
        for (std::int64_t i = 0; i < out_numel; ++i) {
            const float s = accs[static_cast<std::size_t>(i)].total();
            yp[i] = mean ? s * inv : s;
        }
    }

    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        auto strides_sh = std::make_shared<std::vector<std::int64_t>>(std::move(out_strides));
        const float scale = mean ? inv : 1.0f;
        tape->record(y, {x.node()},
                     [xc, strides_sh, scale, nd](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         std::vector<std::int64_t> coord(static_cast<std::size_t>(nd), 0);
                         std::int64_t out_off = 0;
                         const std::int64_t total = xc.numel();
                         const auto& os = *strides_sh;
                         for (std::int64_t flat = 0; flat < total; ++flat) {
                             gx[flat] += g[out_off] * scale;
                             for (std::int64_t i = nd - 1; i >= 0; --i) {
                                 auto& c = coord[static_cast<std::size_t>(i)];
                                 out_off += os[static_cast<std::size_t>(i)];
                                 if (++c < xc.dim(i)) {
                                     break;
                                 }
                                 c = 0;
                                 out_off -= os[static_cast<std::size_t>(i)] * xc.dim(i);
                             }
                         }
                     });
    }
    return y;
}

// Min/max along one axis. The winner takes the whole gradient; ties pick the
// lowest index along the axis.
Tensor reduce_extreme_impl(const Tensor& x, std::int64_t axis, bool is_min, const char* op) {
    const std::int64_t nd = x.ndim();
    if (nd == 0) {
        throw ShapeError(std::string(op) + ": scalar input");
    }
    axis = detail::normalize_axis(axis, nd, op);
    const auto strides = detail::row_major_strides(x.shape());
    const std::int64_t extent = x.dim(axis);
    const std::int64_t stride = strides[static_cast<std::size_t>(axis)];
    const std::int64_t outer = x.numel() / (extent * stride);

    Shape out_shape;
    for (std::int64_t i = 0; i < nd; ++i) {
        if (i != axis) {
            out_shape.push_back(x.dim(i));
        }
    }
    Tensor y = Tensor::zeros(out_shape);
    auto winners = std::make_shared<std::vector<std::int32_t>>(static_cast<std::size_t>(y.numel()));
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        std::int32_t* wp = winners->data();
        std::int64_t oi = 0;
        for (std::int64_t ou = 0; ou < outer; ++ou) {
            for (std::int64_t in = 0; in < stride; ++in, ++oi) {
                const std::int64_t base = ou * extent * stride + in;
                float best = xp[base];
                std::int64_t best_i = 0;
                for (std::int64_t i = 1; i < extent; ++i) {
                    const float v = xp[base + i * stride];
                    if (is_min ? (v < best) : (v > best)) {
                        best = v;
                        best_i = i;
                    }
                }
                yp[oi] = best;
                wp[oi] = static_cast<std::int32_t>(best_i);
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        tape->record(y, {x.node()},
                     [xc, winners, outer, extent, stride](std::span<const float> g,
                                                          Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         const std::int32_t* wp = winners->data();
                         std::int64_t oi = 0;
                         for (std::int64_t ou = 0; ou < outer; ++ou) {
                             for (std::int64_t in = 0; in < stride; ++in, ++oi) {
                                 gx[ou * extent * stride + in + wp[oi] * stride] += g[oi];
                             }
                         }
                     });
    }
    return y;
}

} // namespace

Tensor reduce_sum(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims) {
    return reduce_sum_impl(x, std::move(axes), keepdims, false, "reduce_sum");
}

Tensor reduce_mean(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims) {
    if (x.numel() == 0) {
        throw ShapeError("reduce_mean: empty input");
    }
    return reduce_sum_impl(x, std::move(axes), keepdims, true, "reduce_mean");
}

Tensor reduce_sum(const Tensor& x) { return reduce_sum_impl(x, {}, false, false, "reduce_sum"); }

Tensor reduce_mean(const Tensor& x) {
    if (x.numel() == 0) {
        throw ShapeError("reduce_mean: empty input");
    }
    return reduce_sum_impl(x, {}, false, true, "reduce_mean");
}

Tensor reduce_min(const Tensor& x, std::int64_t axis) {
    return reduce_extreme_impl(x, axis, true, "reduce_min");
}

Tensor reduce_max(const Tensor& x, std::int64_t axis) {
    return reduce_extreme_impl(x, axis, false, "reduce_max");
}

} // namespace strokesynth::ops
