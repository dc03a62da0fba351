// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "strokesynth/errors.hpp"
#include "strokesynth/tensor.hpp"
#include "tensor_detail.hpp"

namespace strokesynth::ops {

namespace {

constexpr float kInvSqrt2 = 0.70710678118654752440f;
constexpr float kInvSqrt2Pi = 0.39894228040143267794f;

// Unary elementwise op. df(x, y) is dy/dx given input and output values.
template <typename F, typename DF>
Tensor unary_op(const Tensor& x, F&& f, DF&& df) {
    const auto xs = x.values();
    std::vector<float> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = f(xs[i]);
    }
    Tensor y = Tensor::from_data(x.shape(), std::move(out));
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        Tensor yc = y;
        tape->record(y, {x.node()}, [xc, yc, df](std::span<const float> g, Tape::BackwardCtx& ctx) {
            auto gx = ctx.grad(xc.node());
            const auto xv = xc.values();
            const auto yv = yc.values();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i] * df(xv[i], yv[i]);
            }
        });
    }
    return y;
}

// Binary elementwise op with trailing-dimension broadcasting.
// dfa/dfb give the partials w.r.t. a and b from (a, b, y).
template <typename F, typename DFA, typename DFB>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F&& f, DFA&& dfa, DFB&& dfb) {
    const Shape out_shape = detail::broadcast_shape(a.shape(), b.shape(), name);
    const auto sa = detail::broadcast_strides(a.shape(), out_shape);
    const auto sb = detail::broadcast_strides(b.shape(), out_shape);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<float> out(static_cast<std::size_t>(shape_numel(out_shape)));
    if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = f(av[i], bv[i]);
        }
    } else {
        detail::for_each_broadcast2(out_shape, sa, sb,
                                    [&](std::int64_t i, std::int64_t ao, std::int64_t bo) {
                                        out[static_cast<std::size_t>(i)] =
                                            f(av[static_cast<std::size_t>(ao)],
                                              bv[static_cast<std::size_t>(bo)]);
                                    });
    }
    Tensor y = Tensor::from_data(out_shape, std::move(out));
    if (Tape* tape = common_tape({&a, &b})) {
        Tensor ac = a;
        Tensor bc = b;
        Tensor yc = y;
        std::vector<int> inputs;
        if (a.on_tape()) {
            inputs.push_back(a.node());
        }
        if (b.on_tape()) {
            inputs.push_back(b.node());
        }
        tape->record(y, std::move(inputs),
                     [ac, bc, yc, sa, sb, dfa, dfb](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         const auto av2 = ac.values();
                         const auto bv2 = bc.values();
                         const auto yv = yc.values();
                         std::span<float> ga, gb;
                         if (ac.on_tape()) {
                             ga = ctx.grad(ac.node());
                         }
                         if (bc.on_tape()) {
                             gb = ctx.grad(bc.node());
                         }
                         detail::for_each_broadcast2(
                             yc.shape(), sa, sb,
                             [&](std::int64_t i, std::int64_t ao, std::int64_t bo) {
                                 const float gi = g[static_cast<std::size_t>(i)];
                                 const float x1 = av2[static_cast<std::size_t>(ao)];
                                 const float x2 = bv2[static_cast<std::size_t>(bo)];
                                 const float yi = yv[static_cast<std::size_t>(i)];
                                 if (!ga.empty()) {
                                     ga[static_cast<std::size_t>(ao)] += gi * dfa(x1, x2, yi);
                                 }
                                 if (!gb.empty()) {
                                     gb[static_cast<std::size_t>(bo)] += gi * dfb(x1, x2, yi);
                                 }
                             });
                     });
    }
    return y;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](float x, float y) { return x + y; },
        [](float, float, float) { return 1.0f; }, [](float, float, float) { return 1.0f; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](float x, float y) { return x - y; },
        [](float, float, float) { return 1.0f; }, [](float, float, float) { return -1.0f; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](float x, float y) { return x * y; },
        [](float, float y, float) { return y; }, [](float x, float, float) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        "div", a, b, [](float x, float y) { return x / y; },
        [](float, float y, float) { return 1.0f / y; },
        [](float, float y, float out) { return -out / y; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
    return binary_op(
        "maximum", a, b, [](float x, float y) { return x >= y ? x : y; },
        [](float x, float y, float) { return x >= y ? 1.0f : 0.0f; },
        [](float x, float y, float) { return x >= y ? 0.0f : 1.0f; });
}

Tensor pow(const Tensor& a, float exponent) {
    const bool integral = exponent == std::floor(exponent);
    for (const float v : a.values()) {
        if (v < 0.0f && !integral) {
            throw DomainError("pow: negative base with non-integer exponent");
        }
    }
    return unary_op(
        a, [exponent](float x) { return std::pow(x, exponent); },
        [exponent](float x, float) { return exponent * std::pow(x, exponent - 1.0f); });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](float v) { return v > 0.0f ? v : 0.0f; },
        [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Tensor gelu(const Tensor& x) {
    return unary_op(
        x, [](float v) { return 0.5f * v * (1.0f + std::erf(v * kInvSqrt2)); },
        [](float v, float) {
            const float cdf = 0.5f * (1.0f + std::erf(v * kInvSqrt2));
            const float pdf = kInvSqrt2Pi * std::exp(-0.5f * v * v);
            return cdf + v * pdf;
        });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x,
        [](float v) {
            // evaluate in the stable branch to avoid overflow in exp
            return v >= 0.0f ? 1.0f / (1.0f + std::exp(-v))
                             : std::exp(v) / (1.0f + std::exp(v));
        },
        [](float, float y) { return y * (1.0f - y); });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](float v) { return std::exp(v); }, [](float, float y) { return y; });
}

Tensor log(const Tensor& x) {
    for (const float v : x.values()) {
        if (v < 0.0f) {
            throw DomainError("log: negative input");
        }
    }
    return unary_op(
        x, [](float v) { return std::log(v); }, [](float v, float) { return 1.0f / v; });
}

Tensor sqrt(const Tensor& x) {
    for (const float v : x.values()) {
        if (v < 0.0f) {
            throw DomainError("sqrt: negative input");
        }
    }
    return unary_op(
        x, [](float v) { return std::sqrt(v); },
        [](float, float y) { return y > 0.0f ? 0.5f / y : 0.0f; });
}

Tensor negate(const Tensor& x) {
    return unary_op(
        x, [](float v) { return -v; }, [](float, float) { return -1.0f; });
}

Tensor add(const Tensor& a, float b) {
    return add(a, Tensor::scalar(b));
}

Tensor mul(const Tensor& a, float b) {
    return mul(a, Tensor::scalar(b));
}

} // namespace strokesynth::ops
