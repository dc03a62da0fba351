// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

// Internal shape/broadcast helpers shared by the op implementation files.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "strokesynth/errors.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth::detail {

inline std::vector<std::int64_t> row_major_strides(const Shape& shape) {
    std::vector<std::int64_t> strides(shape.size(), 1);
    for (std::int64_t i = static_cast<std::int64_t>(shape.size()) - 2; i >= 0; --i) {
        strides[static_cast<std::size_t>(i)] =
            strides[static_cast<std::size_t>(i + 1)] * shape[static_cast<std::size_t>(i + 1)];
    }
    return strides;
}

inline std::int64_t normalize_axis(std::int64_t axis, std::int64_t ndim, const char* op) {
    if (axis < 0) {
        axis += ndim;
    }
    if (axis < 0 || axis >= ndim) {
        throw ShapeError(std::string(op) + ": axis out of range");
    }
    return axis;
}

/// Broadcast shape of a and b under trailing-dimension alignment.
inline Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    const std::size_t nd = std::max(a.size(), b.size());
    Shape out(nd, 1);
    for (std::size_t i = 0; i < nd; ++i) {
        const std::int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1) {
            throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                             shape_str(b) + " are not broadcastable");
        }
        out[nd - 1 - i] = std::max(da, db);
    }
    return out;
}

/// Strides of `in` viewed through the broadcast output shape; broadcast
/// dimensions get stride 0.
inline std::vector<std::int64_t> broadcast_strides(const Shape& in, const Shape& out) {
    const auto in_strides = row_major_strides(in);
    std::vector<std::int64_t> strides(out.size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i < in.size()) {
            const std::size_t in_axis = in.size() - 1 - i;
            const std::size_t out_axis = out.size() - 1 - i;
            if (in[in_axis] == out[out_axis]) {
                strides[out_axis] = in_strides[in_axis];
            } // else extent 1 broadcast: stride stays 0
        }
    }
    return strides;
}

/// Odometer walk over `out` in row-major order, tracking flat offsets into
/// two broadcast operands. fn(out_index, a_offset, b_offset).
template <typename Fn>
void for_each_broadcast2(const Shape& out, std::span<const std::int64_t> sa,
                         std::span<const std::int64_t> sb, Fn&& fn) {
    const std::int64_t total = shape_numel(out);
    if (total == 0) {
        return;
    }
    const std::size_t nd = out.size();
    if (nd == 0) {
        fn(std::int64_t{0}, std::int64_t{0}, std::int64_t{0});
        return;
    }
    std::vector<std::int64_t> counter(nd, 0);
    std::int64_t ao = 0;
    std::int64_t bo = 0;
    for (std::int64_t i = 0;;) {
        fn(i, ao, bo);
        if (++i == total) {
            break;
        }
        // increment odometer from the innermost dimension
        std::size_t d = nd;
        for (;;) {
            --d;
            ++counter[d];
            ao += sa[d];
            bo += sb[d];
            if (counter[d] < out[d]) {
                break;
            }
            counter[d] = 0;
            ao -= sa[d] * out[d];
            bo -= sb[d] * out[d];
        }
    }
}

} // namespace strokesynth::detail
