// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <limits>

#include "strokesynth/errors.hpp"
#include "strokesynth/parallel.hpp"
#include "strokesynth/tensor.hpp"
#include "tensor_detail.hpp"

namespace strokesynth::ops {

namespace {

struct ConvDims {
    std::int64_t n, c, h, w;     // input
    std::int64_t o, kh, kw;      // kernel
    std::int64_t oh, ow;         // output
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Conv2dSpec& spec, const char* op) {
    if (x.ndim() != 4 || w.ndim() != 4) {
        throw ShapeError(std::string(op) + ": expects NCHW input and OIHW kernel, got " +
                         shape_str(x.shape()) + " and " + shape_str(w.shape()));
    }
    ConvDims d{};
    d.n = x.dim(0);
    d.c = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.o = w.dim(0);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    if (w.dim(1) != d.c) {
        throw ShapeError(std::string(op) + ": kernel input channels " + std::to_string(w.dim(1)) +
                         " do not match input channels " + std::to_string(d.c));
    }
    if (spec.stride_h < 1 || spec.stride_w < 1 || spec.pad_h < 0 || spec.pad_w < 0) {
        throw ShapeError(std::string(op) + ": invalid stride/padding");
    }
    d.oh = (d.h + 2 * spec.pad_h - d.kh) / spec.stride_h + 1;
    d.ow = (d.w + 2 * spec.pad_w - d.kw) / spec.stride_w + 1;
    if (d.oh < 1 || d.ow < 1 || d.kh > d.h + 2 * spec.pad_h || d.kw > d.w + 2 * spec.pad_w) {
        throw ShapeError(std::string(op) + ": kernel does not fit padded input");
    }
    return d;
}

struct PoolDims {
    std::int64_t n, c, h, w, oh, ow;
};

PoolDims pool_dims(const Tensor& x, const Pool2dSpec& spec, const char* op) {
    if (x.ndim() != 4) {
        throw ShapeError(std::string(op) + ": expects NCHW input, got " + shape_str(x.shape()));
    }
    if (spec.kernel_h < 1 || spec.kernel_w < 1 || spec.stride_h < 1 || spec.stride_w < 1 ||
        spec.pad_h < 0 || spec.pad_w < 0) {
        throw ShapeError(std::string(op) + ": invalid kernel/stride/padding");
    }
    PoolDims d{};
    d.n = x.dim(0);
    d.c = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.oh = (d.h + 2 * spec.pad_h - spec.kernel_h) / spec.stride_h + 1;
    d.ow = (d.w + 2 * spec.pad_w - spec.kernel_w) / spec.stride_w + 1;
    if (d.oh < 1 || d.ow < 1) {
        throw ShapeError(std::string(op) + ": kernel does not fit padded input");
    }
    return d;
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dSpec& spec) {
    return conv2d(x, w, Tensor(), spec);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, const Conv2dSpec& spec) {
    const ConvDims d = conv_dims(x, w, spec, "conv2d");
    if (bias.defined() && bias.numel() != d.o) {
        throw ShapeError("conv2d: bias length does not match output channels");
    }
    Tensor y = Tensor::zeros({d.n, d.o, d.oh, d.ow});
    {
        const float* xp = x.values().data();
        const float* wp = w.values().data();
        const float* bp = bias.defined() ? bias.values().data() : nullptr;
        float* yp = y.mutable_values().data();
        parallel_for(d.n * d.o * d.oh, 4, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t row = begin; row < end; ++row) {
                const std::int64_t oh = row % d.oh;
                const std::int64_t o = (row / d.oh) % d.o;
                const std::int64_t n = row / (d.oh * d.o);
                const float* wbase = wp + o * d.c * d.kh * d.kw;
                for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                    PairwiseAccumulator acc;
                    const std::int64_t ih0 = oh * spec.stride_h - spec.pad_h;
                    const std::int64_t iw0 = ow * spec.stride_w - spec.pad_w;
                    for (std::int64_t c = 0; c < d.c; ++c) {
                        const float* xplane = xp + (n * d.c + c) * d.h * d.w;
                        const float* wplane = wbase + c * d.kh * d.kw;
                        for (std::int64_t kh = 0; kh < d.kh; ++kh) {
                            const std::int64_t ih = ih0 + kh;
                            if (ih < 0 || ih >= d.h) {
                                continue;
                            }
                            for (std::int64_t kw = 0; kw < d.kw; ++kw) {
                                const std::int64_t iw = iw0 + kw;
                                if (iw < 0 || iw >= d.w) {
                                    continue;
                                }
                                acc.push(xplane[ih * d.w + iw] * wplane[kh * d.kw + kw]);
                            }
                        }
                    }
                    float v = acc.total();
                    if (bp != nullptr) {
                        v += bp[o];
                    }
                    yp[(n * d.o + o) * d.oh * d.ow + oh * d.ow + ow] = v;
                }
            }
        });
    }

    if (Tape* tape = common_tape({&x, &w, &bias})) {
        Tensor xc = x;
        Tensor wc = w;
        Tensor bc = bias;
        std::vector<int> inputs;
        for (const Tensor* t : {&x, &w, &bias}) {
            if (t->defined() && t->on_tape()) {
                inputs.push_back(t->node());
            }
        }
        tape->record(y, std::move(inputs),
                     [xc, wc, bc, d, spec](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         const float* xp = xc.values().data();
                         const float* wp = wc.values().data();
                         if (xc.on_tape()) {
                             // dX[n,c,ih,iw] = sum over kernel taps that cover it
                             float* gx = ctx.grad(xc.node()).data();
                             parallel_for(d.n * d.c * d.h, 8, [&](std::int64_t b, std::int64_t e) {
                                 for (std::int64_t row = b; row < e; ++row) {
                                     const std::int64_t ih = row % d.h;
                                     const std::int64_t c = (row / d.h) % d.c;
                                     const std::int64_t n = row / (d.h * d.c);
                                     for (std::int64_t iw = 0; iw < d.w; ++iw) {
                                         PairwiseAccumulator acc;
                                         for (std::int64_t kh = 0; kh < d.kh; ++kh) {
                                             const std::int64_t ohs = ih + spec.pad_h - kh;
                                             if (ohs < 0 || ohs % spec.stride_h != 0) {
                                                 continue;
                                             }
                                             const std::int64_t oh = ohs / spec.stride_h;
                                             if (oh >= d.oh) {
                                                 continue;
                                             }
                                             for (std::int64_t kw = 0; kw < d.kw; ++kw) {
                                                 const std::int64_t ows = iw + spec.pad_w - kw;
                                                 if (ows < 0 || ows % spec.stride_w != 0) {
                                                     continue;
                                                 }
                                                 const std::int64_t ow = ows / spec.stride_w;
                                                 if (ow >= d.ow) {
                                                     continue;
                                                 }
                                                 for (std::int64_t o = 0; o < d.o; ++o) {
                                                     acc.push(
                                                         g[(n * d.o + o) * d.oh * d.ow + oh * d.ow + ow] *
                                                         wp[((o * d.c + c) * d.kh + kh) * d.kw + kw]);
                                                 }
                                             }
                                         }
                                         gx[(n * d.c + c) * d.h * d.w + ih * d.w + iw] += acc.total();
                                     }
                                 }
                             });
                         }
                         if (wc.on_tape()) {
                             float* gw = ctx.grad(wc.node()).data();
                             parallel_for(d.o * d.c, 1, [&](std::int64_t b, std::int64_t e) {
                                 for (std::int64_t oc = b; oc < e; ++oc) {
                                     const std::int64_t o = oc / d.c;
                                     const std::int64_t c = oc % d.c;
                                     for (std::int64_t kh = 0; kh < d.kh; ++kh) {
                                         for (std::int64_t kw = 0; kw < d.kw; ++kw) {
                                             PairwiseAccumulator acc;
                                             for (std::int64_t n = 0; n < d.n; ++n) {
                                                 const float* xplane = xp + (n * d.c + c) * d.h * d.w;
                                                 const float* gplane =
                                                     g.data() + (n * d.o + o) * d.oh * d.ow;
                                                 for (std::int64_t oh = 0; oh < d.oh; ++oh) {
                                                     const std::int64_t ih = oh * spec.stride_h - spec.pad_h + kh;
                                                     if (ih < 0 || ih >= d.h) {
                                                         continue;
                                                     }
                                                     for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                                                         const std::int64_t iw = ow * spec.stride_w - spec.pad_w + kw;
                                                         if (iw < 0 || iw >= d.w) {
                                                             continue;
                                                         }
                                                         acc.push(gplane[oh * d.ow + ow] *
                                                                  xplane[ih * d.w + iw]);
                                                     }
                                                 }
                                             }
                                             gw[((o * d.c + c) * d.kh + kh) * d.kw + kw] += acc.total();
                                         }
                                     }
                                 }
                             });
                         }
                         if (bc.defined() && bc.on_tape()) {
                             float* gb = ctx.grad(bc.node()).data();
                             for (std::int64_t o = 0; o < d.o; ++o) {
                                 PairwiseAccumulator acc;
                                 for (std::int64_t n = 0; n < d.n; ++n) {
                                     const float* gplane = g.data() + (n * d.o + o) * d.oh * d.ow;
                                     for (std::int64_t i = 0; i < d.oh * d.ow; ++i) {
                                         acc.push(gplane[i]);
                                     }
                                 }
                                 gb[o] += acc.total();
                             }
                         }
                     });
    }
    return y;
}

Tensor maxpool2d(const Tensor& x, const Pool2dSpec& spec) {
    const PoolDims d = pool_dims(x, spec, "maxpool2d");
    Tensor y = Tensor::zeros({d.n, d.c, d.oh, d.ow});
    // winner flat index within the H*W plane, per output element
    auto argmax = std::make_shared<std::vector<std::int32_t>>(static_cast<std::size_t>(y.numel()));
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        std::int32_t* am = argmax->data();
        for (std::int64_t plane = 0; plane < d.n * d.c; ++plane) {
            const float* xplane = xp + plane * d.h * d.w;
            for (std::int64_t oh = 0; oh < d.oh; ++oh) {
                for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int64_t best_idx = -1;
                    for (std::int64_t kh = 0; kh < spec.kernel_h; ++kh) {
                        const std::int64_t ih = oh * spec.stride_h - spec.pad_h + kh;
                        if (ih < 0 || ih >= d.h) {
                            continue;
                        }
                        for (std::int64_t kw = 0; kw < spec.kernel_w; ++kw) {
                            const std::int64_t iw = ow * spec.stride_w - spec.pad_w + kw;
                            if (iw < 0 || iw >= d.w) {
                                continue;
                            }
                            const float v = xplane[ih * d.w + iw];
                            if (v > best) { // strict: ties keep the lowest flat index
                                best = v;
                                best_idx = ih * d.w + iw;
                            }
                        }
                    }
                    if (best_idx < 0) {
                        throw ShapeError("maxpool2d: window contains no valid elements");
                    }
                    const std::int64_t oi = plane * d.oh * d.ow + oh * d.ow + ow;
                    yp[oi] = best;
                    am[oi] = static_cast<std::int32_t>(best_idx);
                }
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        tape->record(y, {x.node()}, [xc, argmax, d](std::span<const float> g, Tape::BackwardCtx& ctx) {
            float* gx = ctx.grad(xc.node()).data();
            const std::int32_t* am = argmax->data();
            const std::int64_t out_plane = d.oh * d.ow;
            for (std::int64_t plane = 0; plane < d.n * d.c; ++plane) {
                for (std::int64_t i = 0; i < out_plane; ++i) {
                    gx[plane * d.h * d.w + am[plane * out_plane + i]] += g[plane * out_plane + i];
                }
            }
        });
    }
    return y;
}

Tensor avgpool2d(const Tensor& x, const Pool2dSpec& spec, bool count_include_pad) {
    const PoolDims d = pool_dims(x, spec, "avgpool2d");
    Tensor y = Tensor::zeros({d.n, d.c, d.oh, d.ow});
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t plane = 0; plane < d.n * d.c; ++plane) {
            const float* xplane = xp + plane * d.h * d.w;
            for (std::int64_t oh = 0; oh < d.oh; ++oh) {
                for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                    PairwiseAccumulator acc;
                    std::int64_t count = 0;
                    for (std::int64_t kh = 0; kh < spec.kernel_h; ++kh) {
                        const std::int64_t ih = oh * spec.stride_h - spec.pad_h + kh;
                        if (ih < 0 || ih >= d.h) {
                            continue;
                        }
                        for (std::int64_t kw = 0; kw < spec.kernel_w; ++kw) {
                            const std::int64_t iw = ow * spec.stride_w - spec.pad_w + kw;
                            if (iw < 0 || iw >= d.w) {
                                continue;
                            }
                            acc.push(xplane[ih * d.w + iw]);
                            ++count;
                        }
                    }
                    const std::int64_t denom =
                        count_include_pad ? spec.kernel_h * spec.kernel_w : count;
                    yp[plane * d.oh * d.ow + oh * d.ow + ow] =
                        denom > 0 ? acc.total() / static_cast<float>(denom) : 0.0f;
                }
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        tape->record(y, {x.node()},
                     [xc, d, spec, count_include_pad](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         for (std::int64_t plane = 0; plane < d.n * d.c; ++plane) {
                             float* gplane = gx + plane * d.h * d.w;
                             for (std::int64_t oh = 0; oh < d.oh; ++oh) {
                                 for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                                     std::int64_t count = 0;
                                     if (count_include_pad) {
                                         count = spec.kernel_h * spec.kernel_w;
                                     } else {
                                         for (std::int64_t kh = 0; kh < spec.kernel_h; ++kh) {
                                             const std::int64_t ih = oh * spec.stride_h - spec.pad_h + kh;
                                             if (ih < 0 || ih >= d.h) {
                                                 continue;
                                             }
                                             for (std::int64_t kw = 0; kw < spec.kernel_w; ++kw) {
                                                 const std::int64_t iw = ow * spec.stride_w - spec.pad_w + kw;
                                                 if (iw >= 0 && iw < d.w) {
                                                     ++count;
                                                 }
                                             }
                                         }
                                     }
                                     if (count == 0) {
                                         continue;
                                     }
                                     const float gv = g[plane * d.oh * d.ow + oh * d.ow + ow] /
                                                      static_cast<float>(count);
                                     for (std::int64_t kh = 0; kh < spec.kernel_h; ++kh) {
                                         const std::int64_t ih = oh * spec.stride_h - spec.pad_h + kh;
                                         if (ih < 0 || ih >= d.h) {
                                             continue;
                                         }
                                         for (std::int64_t kw = 0; kw < spec.kernel_w; ++kw) {
                                             const std::int64_t iw = ow * spec.stride_w - spec.pad_w + kw;
                                             if (iw >= 0 && iw < d.w) {
                                                 gplane[ih * d.w + iw] += gv;
                                             }
                                         }
                                     }
                                 }
                             }
                         }
                     });
    }
    return y;
}

Tensor softmax(const Tensor& x, std::int64_t axis) {
    const auto nd = x.ndim();
    if (nd == 0) {
        throw ShapeError("softmax: scalar input");
    }
    axis = detail::normalize_axis(axis, nd, "softmax");
    const auto strides = detail::row_major_strides(x.shape());
    const std::int64_t extent = x.dim(axis);
    const std::int64_t stride = strides[static_cast<std::size_t>(axis)];
    const std::int64_t outer = x.numel() / (extent * stride);

    Tensor y = Tensor::zeros(x.shape());
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t ou = 0; ou < outer; ++ou) {
            for (std::int64_t in = 0; in < stride; ++in) {
                const std::int64_t base = ou * extent * stride + in;
                float mx = -std::numeric_limits<float>::infinity();
                for (std::int64_t i = 0; i < extent; ++i) {
                    mx = std::max(mx, xp[base + i * stride]);
                }
                PairwiseAccumulator denom;
                for (std::int64_t i = 0; i < extent; ++i) {
                    const float e = std::exp(xp[base + i * stride] - mx);
                    yp[base + i * stride] = e;
                    denom.push(e);
                }
                const float z = denom.total();
                for (std::int64_t i = 0; i < extent; ++i) {
                    yp[base + i * stride] /= z;
                }
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        Tensor yc = y;
        tape->record(y, {x.node()},
                     [xc, yc, outer, extent, stride](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         const float* yp = yc.values().data();
                         for (std::int64_t ou = 0; ou < outer; ++ou) {
                             for (std::int64_t in = 0; in < stride; ++in) {
                                 const std::int64_t base = ou * extent * stride + in;
                                 PairwiseAccumulator dot;
                                 for (std::int64_t i = 0; i < extent; ++i) {
                                     dot.push(g[base + i * stride] * yp[base + i * stride]);
                                 }
                                 const float s = dot.total();
                                 for (std::int64_t i = 0; i < extent; ++i) {
                                     const std::int64_t idx = base + i * stride;
                                     gx[idx] += yp[idx] * (g[idx] - s);
                                 }
                             }
                         }
                     });
    }
    return y;
}

Tensor layernorm(const Tensor& x, const Tensor& scale, const Tensor& bias, std::int64_t axis,
                 float eps) {
    const auto nd = x.ndim();
    axis = detail::normalize_axis(axis, nd, "layernorm");
    std::int64_t inner = 1;
    for (std::int64_t i = axis; i < nd; ++i) {
        inner *= x.dim(i);
    }
    const std::int64_t outer = x.numel() / inner;
    if (scale.numel() != inner || bias.numel() != inner) {
        throw ShapeError("layernorm: scale/bias must cover the normalized suffix (" +
                         std::to_string(inner) + " elements)");
    }

    Tensor y = Tensor::zeros(x.shape());
    auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(outer));
    auto means = std::make_shared<std::vector<float>>(static_cast<std::size_t>(outer));
    {
        const float* xp = x.values().data();
        const float* sp = scale.values().data();
        const float* bp = bias.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t ou = 0; ou < outer; ++ou) {
            const float* row = xp + ou * inner;
            PairwiseAccumulator sum;
            for (std::int64_t i = 0; i < inner; ++i) {
                sum.push(row[i]);
            }
            const float mean = sum.total() / static_cast<float>(inner);
            PairwiseAccumulator var_acc;
            for (std::int64_t i = 0; i < inner; ++i) {
                const float dv = row[i] - mean;
                var_acc.push(dv * dv);
            }
            const float var = var_acc.total() / static_cast<float>(inner);
            const float inv = 1.0f / std::sqrt(var + eps);
            (*means)[static_cast<std::size_t>(ou)] = mean;
            (*inv_std)[static_cast<std::size_t>(ou)] = inv;
            float* yrow = yp + ou * inner;
            for (std::int64_t i = 0; i < inner; ++i) {
                yrow[i] = (row[i] - mean) * inv * sp[i] + bp[i];
            }
        }
    }
    if (Tape* tape = common_tape({&x, &scale, &bias})) {
        Tensor xc = x;
        Tensor sc = scale;
        Tensor bc = bias;
        std::vector<int> inputs;
        for (const Tensor* t : {&x, &scale, &bias}) {
            if (t->on_tape()) {
                inputs.push_back(t->node());
            }
        }
        tape->record(
            y, std::move(inputs),
            [xc, sc, bc, means, inv_std, outer, inner](std::span<const float> g, Tape::BackwardCtx& ctx) {
                const float* xp = xc.values().data();
                const float* sp = sc.values().data();
                for (std::int64_t ou = 0; ou < outer; ++ou) {
                    const float mean = (*means)[static_cast<std::size_t>(ou)];
                    const float inv = (*inv_std)[static_cast<std::size_t>(ou)];
                    const float* row = xp + ou * inner;
                    const float* grow = g.data() + ou * inner;
                    if (xc.on_tape()) {
                        float* gx = ctx.grad(xc.node()).data() + ou * inner;
                        PairwiseAccumulator s1;
                        PairwiseAccumulator s2;
                        for (std::int64_t i = 0; i < inner; ++i) {
                            const float dy = grow[i] * sp[i];
                            const float xhat = (row[i] - mean) * inv;
                            s1.push(dy);
                            s2.push(dy * xhat);
                        }
                        const float m1 = s1.total() / static_cast<float>(inner);
                        const float m2 = s2.total() / static_cast<float>(inner);
                        for (std::int64_t i = 0; i < inner; ++i) {
                            const float dy = grow[i] * sp[i];
                            const float xhat = (row[i] - mean) * inv;
                            gx[i] += inv * (dy - m1 - xhat * m2);
                        }
                    }
                    if (sc.on_tape()) {
                        float* gs = ctx.grad(sc.node()).data();
                        for (std::int64_t i = 0; i < inner; ++i) {
                            gs[i] += grow[i] * (row[i] - mean) * inv;
                        }
                    }
                    if (bc.on_tape()) {
                        float* gb = ctx.grad(bc.node()).data();
                        for (std::int64_t i = 0; i < inner; ++i) {
                            gb[i] += grow[i];
                        }
                    }
                }
            });
    }
    return y;
}

Tensor batchnorm_inference(const Tensor& x, const Tensor& scale, const Tensor& bias,
                           const Tensor& mean, const Tensor& var, float eps) {
    if (x.ndim() < 2) {
        throw ShapeError("batchnorm_inference: expects at least (N,C) input");
    }
    const std::int64_t channels = x.dim(1);
    for (const Tensor* t : {&scale, &bias, &mean, &var}) {
        if (t->numel() != channels) {
            throw ShapeError("batchnorm_inference: parameter length does not match channels");
        }
    }
    std::int64_t spatial = 1;
    for (std::int64_t i = 2; i < x.ndim(); ++i) {
        spatial *= x.dim(i);
    }
    const std::int64_t batch = x.dim(0);

    // Per-channel affine with fixed statistics. Statistics and affine
    // parameters are constants here (inference only); gradients flow to x.
    std::vector<float> mult(static_cast<std::size_t>(channels));
    std::vector<float> shift(static_cast<std::size_t>(channels));
    for (std::int64_t c = 0; c < channels; ++c) {
        const float inv = 1.0f / std::sqrt(var.values()[static_cast<std::size_t>(c)] + eps);
        mult[static_cast<std::size_t>(c)] = scale.values()[static_cast<std::size_t>(c)] * inv;
        shift[static_cast<std::size_t>(c)] =
            bias.values()[static_cast<std::size_t>(c)] -
            mean.values()[static_cast<std::size_t>(c)] * mult[static_cast<std::size_t>(c)];
    }
    Tensor y = Tensor::zeros(x.shape());
    {
        const float* xp = x.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t n = 0; n < batch; ++n) {
            for (std::int64_t c = 0; c < channels; ++c) {
                const std::int64_t base = (n * channels + c) * spatial;
                const float m = mult[static_cast<std::size_t>(c)];
                const float s = shift[static_cast<std::size_t>(c)];
                for (std::int64_t i = 0; i < spatial; ++i) {
                    yp[base + i] = xp[base + i] * m + s;
                }
            }
        }
    }
    if (Tape* tape = common_tape({&x})) {
        Tensor xc = x;
        auto mult_sh = std::make_shared<std::vector<float>>(std::move(mult));
        tape->record(y, {x.node()},
                     [xc, mult_sh, batch, channels, spatial](std::span<const float> g,
                                                             Tape::BackwardCtx& ctx) {
                         float* gx = ctx.grad(xc.node()).data();
                         for (std::int64_t n = 0; n < batch; ++n) {
                             for (std::int64_t c = 0; c < channels; ++c) {
                                 const std::int64_t base = (n * channels + c) * spatial;
                                 const float m = (*mult_sh)[static_cast<std::size_t>(c)];
                                 for (std::int64_t i = 0; i < spatial; ++i) {
                                     gx[base + i] += g[base + i] * m;
                                 }
                             }
                         }
                     });
    }
    return y;
}

} // namespace strokesynth::ops
