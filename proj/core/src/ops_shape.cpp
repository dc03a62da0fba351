// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>

#include "strokesynth/errors.hpp"
#include "strokesynth/tensor.hpp"
#include "tensor_detail.hpp"

namespace strokesynth::ops {

Tensor reshape(const Tensor& x, Shape new_shape) {
    std::int64_t known = 1;
    std::int64_t infer_at = -1;
    for (std::size_t i = 0; i < new_shape.size(); ++i) {
        if (new_shape[i] == -1) {
            if (infer_at >= 0) {
                throw ShapeError("reshape: more than one inferred dimension");
            }
            infer_at = static_cast<std::int64_t>(i);
        } else if (new_shape[i] < 0) {
            throw ShapeError("reshape: negative dimension");
        } else {
            known *= new_shape[i];
        }
    }
    if (infer_at >= 0) {
        if (known == 0 || x.numel() % known != 0) {
            throw ShapeError("reshape: cannot infer dimension for " + shape_str(x.shape()) +
                             " -> " + shape_str(new_shape));
        }
        new_shape[static_cast<std::size_t>(infer_at)] = x.numel() / known;
    } else if (known != x.numel()) {
        throw ShapeError("reshape: element count mismatch, " + shape_str(x.shape()) + " -> " +
                         shape_str(new_shape));
    }

    Tensor y = Tensor::from_data(new_shape, std::vector<float>(x.values().begin(), x.values().end()));
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        tape->record(y, {x.node()}, [xc](std::span<const float> g, Tape::BackwardCtx& ctx) {
            float* gx = ctx.grad(xc.node()).data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i];
            }
        });
    }
    return y;
}

Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm) {
    const std::int64_t nd = x.ndim();
    if (static_cast<std::int64_t>(perm.size()) != nd) {
        throw ShapeError("transpose: permutation length does not match rank");
    }
    std::vector<bool> seen(static_cast<std::size_t>(nd), false);
    for (auto& p : perm) {
        p = detail::normalize_axis(p, nd, "transpose");
        if (seen[static_cast<std::size_t>(p)]) {
            throw ShapeError("transpose: duplicate axis in permutation");
        }
        seen[static_cast<std::size_t>(p)] = true;
    }

    Shape out_shape(static_cast<std::size_t>(nd));
    for (std::int64_t i = 0; i < nd; ++i) {
        out_shape[static_cast<std::size_t>(i)] = x.dim(perm[static_cast<std::size_t>(i)]);
    }
    const auto in_strides = detail::row_major_strides(x.shape());
    // Stride of each output dimension inside the input buffer.
    auto gather = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(nd));
    for (std::int64_t i = 0; i < nd; ++i) {
        (*gather)[static_cast<std::size_t>(i)] = in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }

    Tensor y = Tensor::zeros(out_shape);
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        std::vector<std::int64_t> coord(static_cast<std::size_t>(nd), 0);
        std::int64_t in_off = 0;
        const std::int64_t total = y.numel();
        for (std::int64_t flat = 0; flat < total; ++flat) {
            yp[flat] = xp[in_off];
            for (std::int64_t i = nd - 1; i >= 0; --i) {
                auto& c = coord[static_cast<std::size_t>(i)];
                in_off += (*gather)[static_cast<std::size_t>(i)];
                if (++c < out_shape[static_cast<std::size_t>(i)]) {
                    break;
                }
                c = 0;
                in_off -= (*gather)[static_cast<std::size_t>(i)] * out_shape[static_cast<std::size_t>(i)];
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        auto shape_sh = std::make_shared<Shape>(out_shape);
        tape->record(y, {x.node()},
                     [xc, gather, shape_sh, nd](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         std::vector<std::int64_t> coord(static_cast<std::size_t>(nd), 0);
                         std::int64_t in_off = 0;
                         for (std::size_t flat = 0; flat < g.size(); ++flat) {
                             gx[in_off] += g[flat];
                             for (std::int64_t i = nd - 1; i >= 0; --i) {
                                 auto& c = coord[static_cast<std::size_t>(i)];
                                 in_off += (*gather)[static_cast<std::size_t>(i)];
                                 if (++c < (*shape_sh)[static_cast<std::size_t>(i)]) {
                                     break;
                                 }
                                 c = 0;
                                 in_off -= (*gather)[static_cast<std::size_t>(i)] *
                                           (*shape_sh)[static_cast<std::size_t>(i)];
                             }
                         }
                     });
    }
    return y;
}

Tensor concat(std::span<const Tensor> parts, std::int64_t axis) {
    if (parts.empty()) {
        throw ShapeError("concat: no inputs");
    }
    const std::int64_t nd = parts[0].ndim();
    axis = detail::normalize_axis(axis, nd, "concat");
    std::int64_t axis_total = 0;
    for (const Tensor& t : parts) {
        if (t.ndim() != nd) {
            throw ShapeError("concat: rank mismatch");
        }
        for (std::int64_t i = 0; i < nd; ++i) {
            if (i != axis && t.dim(i) != parts[0].dim(i)) {
                throw ShapeError("concat: shapes differ outside the concat axis, " +
                                 shape_str(parts[0].shape()) + " vs " + shape_str(t.shape()));
            }
        }
        axis_total += t.dim(axis);
    }
    Shape out_shape = parts[0].shape();
    out_shape[static_cast<std::size_t>(axis)] = axis_total;

    std::int64_t outer = 1;
    for (std::int64_t i = 0; i < axis; ++i) {
        outer *= out_shape[static_cast<std::size_t>(i)];
    }
    std::int64_t inner = 1;
    for (std::int64_t i = axis + 1; i < nd; ++i) {
        inner *= out_shape[static_cast<std::size_t>(i)];
    }

    Tensor y = Tensor::zeros(out_shape);
    {
        float* yp = y.mutable_values().data();
        const std::int64_t out_row = axis_total * inner;
        std::int64_t axis_off = 0;
        for (const Tensor& t : parts) {
            const float* tp = t.values().data();
            const std::int64_t part_row = t.dim(axis) * inner;
            for (std::int64_t ou = 0; ou < outer; ++ou) {
                std::copy_n(tp + ou * part_row, part_row, yp + ou * out_row + axis_off * inner);
            }
            axis_off += t.dim(axis);
        }
    }

    Tape* tape = nullptr;
    for (const Tensor& t : parts) {
        if (!t.on_tape()) {
            continue;
        }
        if (tape != nullptr && tape != t.tape()) {
            throw ContractError("concat: inputs recorded on different tapes");
        }
        tape = t.tape();
    }
    if (tape != nullptr) {
        auto held = std::make_shared<std::vector<Tensor>>(parts.begin(), parts.end());
        std::vector<int> inputs;
        for (const Tensor& t : parts) {
            if (t.on_tape()) {
                inputs.push_back(t.node());
            }
        }
        tape->record(y, std::move(inputs),
                     [held, axis, outer, inner, axis_total](std::span<const float> g,
                                                            Tape::BackwardCtx& ctx) {
                         const std::int64_t out_row = axis_total * inner;
                         std::int64_t axis_off = 0;
                         for (const Tensor& t : *held) {
                             const std::int64_t part_row = t.dim(axis) * inner;
                             if (t.on_tape()) {
                                 float* gt = ctx.grad(t.node()).data();
                                 for (std::int64_t ou = 0; ou < outer; ++ou) {
                                     const float* src = g.data() + ou * out_row + axis_off * inner;
                                     float* dst = gt + ou * part_row;
                                     for (std::int64_t i = 0; i < part_row; ++i) {
                                         dst[i] += src[i];
                                     }
                                 }
                             }
                             axis_off += t.dim(axis);
                         }
                     });
    }
    return y;
}

Tensor slice(const Tensor& x, std::span<const std::int64_t> starts,
             std::span<const std::int64_t> ends, std::span<const std::int64_t> axes,
             std::span<const std::int64_t> steps) {
    const std::int64_t nd = x.ndim();
    const std::size_t n = starts.size();
    if (ends.size() != n || axes.size() != n || (!steps.empty() && steps.size() != n)) {
        throw ShapeError("slice: starts/ends/axes/steps lengths differ");
    }

    // Per-dimension resolved window: start, step, extent.
    std::vector<std::int64_t> start(static_cast<std::size_t>(nd), 0);
    std::vector<std::int64_t> step(static_cast<std::size_t>(nd), 1);
    Shape out_shape = x.shape();
    std::vector<bool> seen(static_cast<std::size_t>(nd), false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t axis = detail::normalize_axis(axes[i], nd, "slice");
        if (seen[static_cast<std::size_t>(axis)]) {
            throw ShapeError("slice: duplicate axis");
        }
        seen[static_cast<std::size_t>(axis)] = true;
        const std::int64_t extent = x.dim(axis);
        std::int64_t st = steps.empty() ? 1 : steps[i];
        if (st == 0) {
            throw ShapeError("slice: zero step");
        }
        std::int64_t s = starts[i];
        std::int64_t e = ends[i];
        if (s < 0) {
            s += extent;
        }
        if (e < 0) {
            e += extent;
        }
        if (st > 0) {
            s = std::clamp<std::int64_t>(s, 0, extent);
            e = std::clamp<std::int64_t>(e, 0, extent);
            out_shape[static_cast<std::size_t>(axis)] = s < e ? (e - s + st - 1) / st : 0;
        } else {
            s = std::clamp<std::int64_t>(s, 0, extent - 1);
            e = std::clamp<std::int64_t>(e, -1, extent - 1);
            out_shape[static_cast<std::size_t>(axis)] = s > e ? (s - e - st - 1) / (-st) : 0;
        }
        start[static_cast<std::size_t>(axis)] = s;
        step[static_cast<std::size_t>(axis)] = st;
    }

    const auto in_strides = detail::row_major_strides(x.shape());
    std::int64_t base_off = 0;
    auto walk = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(nd));
    for (std::int64_t i = 0; i < nd; ++i) {
        base_off += start[static_cast<std::size_t>(i)] * in_strides[static_cast<std::size_t>(i)];
        (*walk)[static_cast<std::size_t>(i)] =
            step[static_cast<std::size_t>(i)] * in_strides[static_cast<std::size_t>(i)];
    }

    Tensor y = Tensor::zeros(out_shape);
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        std::vector<std::int64_t> coord(static_cast<std::size_t>(nd), 0);
        std::int64_t off = base_off;
        const std::int64_t total = y.numel();
        for (std::int64_t flat = 0; flat < total; ++flat) {
            yp[flat] = xp[off];
            for (std::int64_t i = nd - 1; i >= 0; --i) {
                auto& c = coord[static_cast<std::size_t>(i)];
                off += (*walk)[static_cast<std::size_t>(i)];
                if (++c < out_shape[static_cast<std::size_t>(i)]) {
                    break;
                }
                c = 0;
                off -= (*walk)[static_cast<std::size_t>(i)] * out_shape[static_cast<std::size_t>(i)];
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        auto shape_sh = std::make_shared<Shape>(out_shape);
        tape->record(y, {x.node()},
                     [xc, walk, shape_sh, base_off, nd](std::span<const float> g,
                                                        Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         std::vector<std::int64_t> coord(static_cast<std::size_t>(nd), 0);
                         std::int64_t off = base_off;
                         for (std::size_t flat = 0; flat < g.size(); ++flat) {
                             gx[off] += g[flat];
                             for (std::int64_t i = nd - 1; i >= 0; --i) {
                                 auto& c = coord[static_cast<std::size_t>(i)];
                                 off += (*walk)[static_cast<std::size_t>(i)];
                                 if (++c < (*shape_sh)[static_cast<std::size_t>(i)]) {
                                     break;
                                 }
                                 c = 0;
                                 off -= (*walk)[static_cast<std::size_t>(i)] *
                                        (*shape_sh)[static_cast<std::size_t>(i)];
                             }
                         }
                     });
    }
    return y;
}

} // namespace strokesynth::ops
