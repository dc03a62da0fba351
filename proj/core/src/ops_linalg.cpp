// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/errors.hpp"
#include "strokesynth/parallel.hpp"
#include "strokesynth/tensor.hpp"
#include "tensor_detail.hpp"

namespace strokesynth::ops {

namespace {

// C[m,n] = sum_k A[m,k] B[k,n], one batch. Pairwise accumulation per element.
void matmul_kernel(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
    parallel_for(m, 8, [&](std::int64_t row_begin, std::int64_t row_end) {
        for (std::int64_t i = row_begin; i < row_end; ++i) {
            for (std::int64_t j = 0; j < n; ++j) {
                PairwiseAccumulator acc;
                const float* arow = a + i * k;
                const float* bcol = b + j;
                for (std::int64_t kk = 0; kk < k; ++kk) {
                    acc.push(arow[kk] * bcol[kk * n]);
                }
                c[i * n + j] = acc.total();
            }
        }
    });
}

// GA[m,k] += sum_n G[m,n] B[k,n]
void grad_a_kernel(const float* g, const float* b, float* ga, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t kk = 0; kk < k; ++kk) {
            PairwiseAccumulator acc;
            for (std::int64_t j = 0; j < n; ++j) {
                acc.push(g[i * n + j] * b[kk * n + j]);
            }
            ga[i * k + kk] += acc.total();
        }
    }
}

// GB[k,n] += sum_m A[m,k] G[m,n]
void grad_b_kernel(const float* g, const float* a, float* gb, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
        for (std::int64_t j = 0; j < n; ++j) {
            PairwiseAccumulator acc;
            for (std::int64_t i = 0; i < m; ++i) {
                acc.push(a[i * k + kk] * g[i * n + j]);
            }
            gb[kk * n + j] += acc.total();
        }
    }
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    const auto nda = a.ndim();
    const auto ndb = b.ndim();
    if (!((nda == 2 && ndb == 2) || (nda == 3 && ndb == 3))) {
        throw ShapeError("matmul: expects 2-d or 3-d operands, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    }
    const std::int64_t batch = nda == 3 ? a.dim(0) : 1;
    if (nda == 3 && b.dim(0) != batch) {
        throw ShapeError("matmul: batch dimensions differ");
    }
    const std::int64_t m = a.dim(nda - 2);
    const std::int64_t k = a.dim(nda - 1);
    const std::int64_t n = b.dim(ndb - 1);
    if (b.dim(ndb - 2) != k) {
        throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }

    Shape out_shape = nda == 3 ? Shape{batch, m, n} : Shape{m, n};
    Tensor y = Tensor::zeros(out_shape);
    {
        const float* ap = a.values().data();
        const float* bp = b.values().data();
        float* yp = y.mutable_values().data();
        for (std::int64_t bi = 0; bi < batch; ++bi) {
            matmul_kernel(ap + bi * m * k, bp + bi * k * n, yp + bi * m * n, m, k, n);
        }
    }

    if (Tape* tape = common_tape({&a, &b})) {
        Tensor ac = a;
        Tensor bc = b;
        std::vector<int> inputs;
        if (a.on_tape()) {
            inputs.push_back(a.node());
        }
        if (b.on_tape()) {
            inputs.push_back(b.node());
        }
        tape->record(y, std::move(inputs),
                     [ac, bc, batch, m, k, n](std::span<const float> g, Tape::BackwardCtx& ctx) {
                         const float* ap = ac.values().data();
                         const float* bp = bc.values().data();
                         for (std::int64_t bi = 0; bi < batch; ++bi) {
                             const float* gb = g.data() + bi * m * n;
                             if (ac.on_tape()) {
                                 grad_a_kernel(gb, bp + bi * k * n,
                                               ctx.grad(ac.node()).data() + bi * m * k, m, k, n);
                             }
                             if (bc.on_tape()) {
                                 grad_b_kernel(gb, ap + bi * m * k,
                                               ctx.grad(bc.node()).data() + bi * k * n, m, k, n);
                             }
                         }
                     });
    }
    return y;
}

} // namespace strokesynth::ops
