// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/tensor.hpp"

#include <numeric>
#include <sstream>

#include "strokesynth/errors.hpp"

namespace strokesynth {

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (const auto d : shape) {
        if (d < 0) {
            throw ShapeError("negative extent in shape " + shape_str(shape));
        }
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            os << ',';
        }
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor Tensor::zeros(Shape shape) {
    return full(std::move(shape), 0.0f);
}

Tensor Tensor::full(Shape shape, float value) {
    Tensor t;
    const auto n = shape_numel(shape);
    t.shape_ = std::move(shape);
    t.data_ = std::make_shared<std::vector<float>>(static_cast<std::size_t>(n), value);
    return t;
}

Tensor Tensor::scalar(float value) {
    return from_data({}, {value});
}

Tensor Tensor::from_data(Shape shape, std::vector<float> values) {
    const auto n = shape_numel(shape);
    if (n != static_cast<std::int64_t>(values.size())) {
        throw ShapeError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::make_shared<std::vector<float>>(std::move(values));
    return t;
}

std::int64_t Tensor::dim(std::int64_t axis) const {
    const auto n = ndim();
    if (axis < 0) {
        axis += n;
    }
    if (axis < 0 || axis >= n) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape_));
    }
    return shape_[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const {
    return data_ ? static_cast<std::int64_t>(data_->size()) : 0;
}

std::span<const float> Tensor::values() const {
    if (!data_) {
        throw ContractError("values() on an undefined tensor");
    }
    return {data_->data(), data_->size()};
}

std::span<float> Tensor::mutable_values() {
    if (!data_) {
        throw ContractError("mutable_values() on an undefined tensor");
    }
    return {data_->data(), data_->size()};
}

float Tensor::item() const {
    if (numel() != 1) {
        throw ContractError("item() requires a single-element tensor, got " + shape_str(shape_));
    }
    return (*data_)[0];
}

Tensor Tape::leaf(Shape shape, std::vector<float> values) {
    Tensor t = Tensor::from_data(std::move(shape), std::move(values));
    t.tape_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{{}, t.numel(), nullptr});
    return t;
}

void Tape::record(Tensor& out, std::vector<int> inputs, BackwardFn fn) {
    out.tape_ = this;
    out.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{std::move(inputs), out.numel(), std::move(fn)});
}

std::span<float> Tape::BackwardCtx::grad(int node) {
    auto& slot = store_[static_cast<std::size_t>(node)];
    if (slot.empty()) {
        slot.assign(static_cast<std::size_t>(tape_.nodes_[static_cast<std::size_t>(node)].numel), 0.0f);
    }
    return {slot.data(), slot.size()};
}

GradMap Tape::backward(const Tensor& root) const {
    if (root.numel() != 1) {
        throw ContractError("backward() requires a scalar root, got " + shape_str(root.shape()));
    }
    GradMap result;
    if (!root.on_tape()) {
        return result; // constant root: every leaf gradient is zero
    }
    if (root.tape() != this) {
        throw ContractError("backward() root belongs to a different tape");
    }
    auto& store = result.grads_;
    store.resize(nodes_.size());
    store[static_cast<std::size_t>(root.node())] = {1.0f};

    BackwardCtx ctx(*this, store);
    for (int id = root.node(); id >= 0; --id) {
        const auto& node = nodes_[static_cast<std::size_t>(id)];
        auto& g = store[static_cast<std::size_t>(id)];
        if (g.empty() || !node.backward) {
            continue;
        }
        node.backward(std::span<const float>(g.data(), g.size()), ctx);
    }
    return result;
}

std::vector<float> GradMap::grad(const Tensor& t) const {
    const auto id = static_cast<std::size_t>(t.node());
    if (t.on_tape() && id < grads_.size() && !grads_[id].empty()) {
        return grads_[id];
    }
    return std::vector<float>(static_cast<std::size_t>(t.numel()), 0.0f);
}

bool GradMap::touched(const Tensor& t) const {
    const auto id = static_cast<std::size_t>(t.node());
    return t.on_tape() && id < grads_.size() && !grads_[id].empty();
}

Tape* common_tape(std::initializer_list<const Tensor*> inputs) {
    Tape* tape = nullptr;
    for (const Tensor* t : inputs) {
        if (t == nullptr || !t->on_tape()) {
            continue;
        }
        if (tape == nullptr) {
            tape = t->tape();
        } else if (tape != t->tape()) {
            throw ContractError("op inputs live on different tapes");
        }
    }
    return tape;
}

float pairwise_sum(std::span<const float> values) {
    PairwiseAccumulator acc;
    for (const float v : values) {
        acc.push(v);
    }
    return acc.total();
}

} // namespace strokesynth
