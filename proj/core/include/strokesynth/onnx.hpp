// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "strokesynth/encoder.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

/// Decoded tensor payload: float weights or int64 shape/index vectors.
struct TensorData {
    std::string name;
    Shape dims;
    bool is_float = true;
    std::vector<float> floats;
    std::vector<std::int64_t> ints;
};

/// One graph node attribute; `kind` mirrors the file's declared type.
struct AttrValue {
    enum Kind { kNone, kFloat, kInt, kString, kTensor, kFloats, kInts };
    Kind kind = kNone;
    float f = 0.0f;
    std::int64_t i = 0;
    std::string s;
    std::vector<float> floats;
    std::vector<std::int64_t> ints;
    TensorData tensor;
};

struct GraphNode {
    std::string op_type;
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, AttrValue>> attrs;

    const AttrValue* attr(const std::string& key) const;
};

/// A loaded inference graph over the supported op subset: Conv, Relu, Gelu,
/// MaxPool, AveragePool, Gemm, MatMul, Add, Mul, Softmax, LayerNormalization,
/// BatchNormalization, Reshape, Transpose, Concat, Slice, ReduceMean, plus
/// the plumbing ops Flatten, Identity, and Constant. Nodes must arrive in
/// topological order. Immutable after load and shareable across threads.
class EncoderGraph {
public:
    /// Parses the protobuf file. Throws IoError when unreadable, ParseError
    /// on malformed bytes, UnsupportedError naming any op outside the subset.
    static EncoderGraph load(const std::string& path);

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    /// Declared inputs/outputs with shapes; dynamic extents appear as -1.
    const std::vector<std::pair<std::string, Shape>>& inputs() const { return inputs_; }
    const std::vector<std::pair<std::string, Shape>>& outputs() const { return outputs_; }

    /// Runs the graph on the given named inputs and returns the tensors named
    /// by `fetch` (graph outputs or any intermediate, e.g. style taps), in
    /// order, on the inputs' tape. Dynamic extents (-1) skip shape checking.
    std::vector<Tensor> execute(const std::vector<std::pair<std::string, Tensor>>& inputs,
                                std::span<const std::string> fetch) const;

    /// True when some node produces (or some constant provides) this name.
    bool defines(const std::string& name) const;

private:
    std::vector<GraphNode> nodes_;
    std::vector<std::pair<std::string, Shape>> inputs_;
    std::vector<std::pair<std::string, Shape>> outputs_;
    std::map<std::string, Tensor> const_tensors_;
    std::map<std::string, std::vector<std::int64_t>> const_ints_;
};

/// Adapts a loaded graph to the encoder interfaces using a sidecar metadata
/// file at `model_path + ".json"`:
/// {"input_size": int, "mean": [3], "std": [3], "taps": [names]}.
class OnnxEncoder : public ImageEncoder, public StyleFeatureExtractor {
public:
    explicit OnnxEncoder(const std::string& model_path);

    std::int64_t input_size() const override { return input_size_; }
    std::int64_t embed_dim() const override { return embed_dim_; }
    Tensor embed(const Tensor& img) const override;
    std::vector<std::pair<std::string, Tensor>> taps(const Tensor& img) const override;

    const EncoderGraph& graph() const { return graph_; }

private:
    Tensor normalized_input(const Tensor& img) const;

    EncoderGraph graph_;
    std::int64_t input_size_ = 0;
    std::int64_t embed_dim_ = 0;
    Tensor mean_;
    Tensor std_;
    std::vector<std::string> tap_names_;
};

} // namespace strokesynth
