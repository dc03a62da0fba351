// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace strokesynth {

/// Tensor extents, outermost first. Data is flat row-major f32.
using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

/// Dense float tensor. Value semantics with shared storage: copies alias the
/// same buffer, ops allocate fresh buffers. A tensor produced from (or created
/// as) a tape leaf carries a node handle; everything else is a constant.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, float value);
    static Tensor scalar(float value);
    static Tensor from_data(Shape shape, std::vector<float> values);

    const Shape& shape() const { return shape_; }
    std::int64_t ndim() const { return static_cast<std::int64_t>(shape_.size()); }
    /// Extent along `axis`; negative axes count from the end.
    std::int64_t dim(std::int64_t axis) const;
    std::int64_t numel() const;
    bool defined() const { return data_ != nullptr; }

    std::span<const float> values() const;
    /// Direct write access to the buffer. Intended for filling leaves and
    /// constants; mutating an op output invalidates recorded gradients.
    std::span<float> mutable_values();
    float item() const;

    bool on_tape() const { return tape_ != nullptr && node_ >= 0; }
    Tape* tape() const { return tape_; }
    int node() const { return node_; }

private:
    friend class Tape;
    Shape shape_;
    std::shared_ptr<std::vector<float>> data_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

/// Gradients produced by one backward pass, keyed by tape node.
class GradMap {
public:
    /// Gradient of the root w.r.t. `t`. Zeros if the node was never reached.
    std::vector<float> grad(const Tensor& t) const;
    bool touched(const Tensor& t) const;

private:
    friend class Tape;
    std::vector<std::vector<float>> grads_;
};

/// Reverse-mode gradient tape. Build one per optimization iteration, call
/// backward once, then discard. Nodes are recorded in creation order and every
/// node's inputs precede it, so reverse creation order is a valid topological
/// order for backpropagation.
///
/// A tape belongs to a single optimization run; it is not thread safe.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Creates a gradient-requiring leaf holding a copy of `values`.
    Tensor leaf(Shape shape, std::vector<float> values);

    /// Backpropagates from a scalar root. Returns gradients for every node
    /// reached; leaves that do not influence the root report zeros.
    GradMap backward(const Tensor& root) const;

    int size() const { return static_cast<int>(nodes_.size()); }

    /// Gradient accumulation target handed to backward functions.
    class BackwardCtx {
    public:
        /// Zero-initialized gradient buffer of input node `node`.
        std::span<float> grad(int node);

    private:
        friend class Tape;
        BackwardCtx(const Tape& tape, std::vector<std::vector<float>>& store)
            : tape_(tape), store_(store) {}
        const Tape& tape_;
        std::vector<std::vector<float>>& store_;
    };

    using BackwardFn = std::function<void(std::span<const float> out_grad, BackwardCtx& ctx)>;

    /// Attaches `out` to this tape as a new node. `inputs` are the tape nodes
    /// whose gradients `fn` accumulates. Op implementations call this; user
    /// code normally only needs leaf() and backward().
    void record(Tensor& out, std::vector<int> inputs, BackwardFn fn);

private:
    struct Node {
        std::vector<int> inputs;
        std::int64_t numel = 0;
        BackwardFn backward; // empty for leaves
    };
    std::vector<Node> nodes_;
};

/// Resolves the tape shared by a set of op inputs. Throws ContractError if
/// two inputs live on different tapes; returns nullptr when none is on a tape.
Tape* common_tape(std::initializer_list<const Tensor*> inputs);

/// Fixed-order pairwise (binary tree) accumulator. Gives reductions a
/// deterministic result independent of chunking or thread count and better
/// rounding behavior than naive left-to-right summation.
class PairwiseAccumulator {
public:
    void push(float v) {
        std::uint64_t mask = count_;
        ++count_;
        int level = 0;
        while (mask & 1u) {
            v += levels_[level];
            mask >>= 1u;
            ++level;
        }
        levels_[level] = v;
    }

    float total() const {
        float sum = 0.0f;
        std::uint64_t mask = count_;
        for (int level = 0; mask != 0; ++level, mask >>= 1u) {
            if (mask & 1u) {
                sum += levels_[level];
            }
        }
        return sum;
    }

private:
    std::array<float, 64> levels_{};
    std::uint64_t count_ = 0;
};

float pairwise_sum(std::span<const float> values);

namespace ops {

struct Pool2dSpec {
    int kernel_h = 1, kernel_w = 1;
    int stride_h = 1, stride_w = 1;
    int pad_h = 0, pad_w = 0;
};

struct Conv2dSpec {
    int stride_h = 1, stride_w = 1;
    int pad_h = 0, pad_w = 0;
};

// Elementwise. Binary ops broadcast trailing dimensions (numpy rules).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b); // ties propagate to `a`
Tensor pow(const Tensor& a, float exponent);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x); // exact erf form
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor negate(const Tensor& x);

Tensor add(const Tensor& a, float b);
Tensor mul(const Tensor& a, float b);

// Linear algebra: (m,k)x(k,n) or batched (b,m,k)x(b,k,n).
Tensor matmul(const Tensor& a, const Tensor& b);

// Neural-net ops, NCHW layout.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, const Conv2dSpec& spec);
Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dSpec& spec);
Tensor maxpool2d(const Tensor& x, const Pool2dSpec& spec); // ties pick the lowest flat index
Tensor avgpool2d(const Tensor& x, const Pool2dSpec& spec, bool count_include_pad = false);
Tensor softmax(const Tensor& x, std::int64_t axis = -1);
/// Normalizes over dimensions [axis, ndim); scale and bias match that suffix.
Tensor layernorm(const Tensor& x, const Tensor& scale, const Tensor& bias,
                 std::int64_t axis = -1, float eps = 1e-5f);
Tensor batchnorm_inference(const Tensor& x, const Tensor& scale, const Tensor& bias,
                           const Tensor& mean, const Tensor& var, float eps = 1e-5f);

// Reductions. Fixed-order pairwise summation.
Tensor reduce_sum(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims = false);
Tensor reduce_mean(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims = false);
Tensor reduce_sum(const Tensor& x);  // all axes -> scalar
Tensor reduce_mean(const Tensor& x); // all axes -> scalar
/// Min/max along one axis (no keepdims). Subgradient: winner-take-all,
/// ties to the lowest index.
Tensor reduce_min(const Tensor& x, std::int64_t axis = -1);
Tensor reduce_max(const Tensor& x, std::int64_t axis = -1);

// Shape ops.
Tensor reshape(const Tensor& x, Shape new_shape); // one extent may be -1
Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm);
Tensor concat(std::span<const Tensor> parts, std::int64_t axis);
Tensor slice(const Tensor& x, std::span<const std::int64_t> starts,
             std::span<const std::int64_t> ends, std::span<const std::int64_t> axes,
             std::span<const std::int64_t> steps);

/// Bilinear resampling of img (C,H,W) at grid (Ho,Wo,2) positions given in
/// [-1,1] normalized coordinates, last dim ordered (x, y). Out-of-range
/// samples clamp to the border. Mapping follows the half-pixel convention:
/// x_pix = ((x_norm + 1) * W - 1) / 2.
Tensor grid_sample_bilinear(const Tensor& img, const Tensor& grid);

/// Gathers per-location channel vectors: map (C,H,W) and flat spatial indices
/// (row-major over H*W) -> (M, C).
Tensor gather_hw(const Tensor& map, std::span<const std::int64_t> coords);

} // namespace ops

} // namespace strokesynth
