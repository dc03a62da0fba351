// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/onnx.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "strokesynth/errors.hpp"

namespace strokesynth {

namespace {

// --- Protobuf wire-format reader ------------------------------------------
// Just enough of the encoding to walk the model file: varints, fixed32, and
// length-delimited fields. Unknown fields are skipped so files from any
// exporter load as long as the ops fall in the subset.

class Pb {
public:
    Pb(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

    bool done() const { return p_ == end_; }

    std::uint32_t next_field() {
        const std::uint64_t tag = varint();
        wire_ = static_cast<int>(tag & 7u);
        const std::uint64_t field = tag >> 3;
        if (field == 0) {
            throw ParseError("model file: invalid field tag");
        }
        return static_cast<std::uint32_t>(field);
    }

    std::uint64_t varint() {
        std::uint64_t v = 0;
        int shift = 0;
        for (;;) {
            if (p_ == end_) {
                throw ParseError("model file: truncated varint");
            }
            const std::uint8_t b = *p_++;
            if (shift < 64) {
                v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            }
            if ((b & 0x80) == 0) {
                return v;
            }
            shift += 7;
            if (shift > 70) {
                throw ParseError("model file: varint overflow");
            }
        }
    }

    float fixed32() {
        if (end_ - p_ < 4) {
            throw ParseError("model file: truncated fixed32");
        }
        float f = 0.0f;
        std::memcpy(&f, p_, 4);
        p_ += 4;
        return f;
    }

    std::pair<const std::uint8_t*, std::size_t> bytes() {
        const std::uint64_t len = varint();
        if (static_cast<std::uint64_t>(end_ - p_) < len) {
            throw ParseError("model file: truncated length-delimited field");
        }
        const std::uint8_t* start = p_;
        p_ += len;
        return {start, static_cast<std::size_t>(len)};
    }

    std::string str() {
        const auto [ptr, len] = bytes();
        return std::string(reinterpret_cast<const char*>(ptr), len);
    }

    void skip() {
        switch (wire_) {
        case 0:
            varint();
            return;
        case 1:
            if (end_ - p_ < 8) {
                throw ParseError("model file: truncated fixed64");
            }
            p_ += 8;
            return;
        case 2:
            bytes();
            return;
        case 5:
            if (end_ - p_ < 4) {
                throw ParseError("model file: truncated fixed32");
            }
            p_ += 4;
            return;
        default:
            throw ParseError("model file: unsupported wire type");
        }
    }

    int wire() const { return wire_; }

private:
    const std::uint8_t* p_;
    const std::uint8_t* end_;
    int wire_ = -1;
};

// Repeated int64: either one varint per occurrence or a packed block.
void read_repeated_i64(Pb& pb, std::vector<std::int64_t>& out) {
    if (pb.wire() == 0) {
        out.push_back(static_cast<std::int64_t>(pb.varint()));
        return;
    }
    const auto [ptr, len] = pb.bytes();
    Pb packed(ptr, len);
    while (!packed.done()) {
        out.push_back(static_cast<std::int64_t>(packed.varint()));
    }
}

void read_repeated_f32(Pb& pb, std::vector<float>& out) {
    if (pb.wire() == 5) {
        out.push_back(pb.fixed32());
        return;
    }
    const auto [ptr, len] = pb.bytes();
    if (len % 4 != 0) {
        throw ParseError("model file: bad packed float block");
    }
    const std::size_t n = len / 4;
    const std::size_t base = out.size();
    out.resize(base + n);
    std::memcpy(out.data() + base, ptr, len);
}

constexpr int kDtFloat = 1;
constexpr int kDtInt64 = 7;

TensorData parse_tensor(const std::uint8_t* data, std::size_t size) {
    TensorData t;
    int data_type = kDtFloat;
    std::pair<const std::uint8_t*, std::size_t> raw{nullptr, 0};
    Pb pb(data, size);
    while (!pb.done()) {
        switch (pb.next_field()) {
        case 1:
            read_repeated_i64(pb, t.dims);
            break;
        case 2:
            data_type = static_cast<int>(pb.varint());
            break;
        case 4:
            read_repeated_f32(pb, t.floats);
            break;
        case 7:
            read_repeated_i64(pb, t.ints);
            break;
        case 8:
            t.name = pb.str();
            break;
        case 9:
            raw = pb.bytes();
            break;
        default:
            pb.skip();
            break;
        }
    }
    if (data_type == kDtFloat) {
        t.is_float = true;
        if (raw.first != nullptr) {
            if (raw.second % 4 != 0) {
                throw ParseError("model file: float tensor raw data not 4-byte aligned");
            }
            t.floats.resize(raw.second / 4);
            std::memcpy(t.floats.data(), raw.first, raw.second);
        }
    } else if (data_type == kDtInt64) {
        t.is_float = false;
        if (raw.first != nullptr) {
            if (raw.second % 8 != 0) {
                throw ParseError("model file: int64 tensor raw data not 8-byte aligned");
            }
            t.ints.resize(raw.second / 8);
            std::memcpy(t.ints.data(), raw.first, raw.second);
        }
    } else {
        throw UnsupportedError("model file: tensor '" + t.name +
                               "' uses unsupported data type " + std::to_string(data_type));
    }
    return t;
}

std::pair<std::string, AttrValue> parse_attr(const std::uint8_t* data, std::size_t size) {
    std::string name;
    AttrValue v;
    Pb pb(data, size);
    while (!pb.done()) {
        switch (pb.next_field()) {
        case 1:
            name = pb.str();
            break;
        case 2:
            v.f = pb.fixed32();
            if (v.kind == AttrValue::kNone) {
                v.kind = AttrValue::kFloat;
            }
            break;
        case 3:
            v.i = static_cast<std::int64_t>(pb.varint());
            if (v.kind == AttrValue::kNone) {
                v.kind = AttrValue::kInt;
            }
            break;
        case 4:
            v.s = pb.str();
            if (v.kind == AttrValue::kNone) {
                v.kind = AttrValue::kString;
            }
            break;
        case 5: {
            const auto [ptr, len] = pb.bytes();
            v.tensor = parse_tensor(ptr, len);
            v.kind = AttrValue::kTensor;
            break;
        }
        case 7:
            read_repeated_f32(pb, v.floats);
            v.kind = AttrValue::kFloats;
            break;
        case 8:
            read_repeated_i64(pb, v.ints);
            v.kind = AttrValue::kInts;
            break;
        case 20: {
            // Declared type wins over the guess made from populated fields.
            const auto declared = static_cast<int>(pb.varint());
            switch (declared) {
            case 1:
                v.kind = AttrValue::kFloat;
                break;
            case 2:
                v.kind = AttrValue::kInt;
                break;
            case 3:
                v.kind = AttrValue::kString;
                break;
            case 4:
                v.kind = AttrValue::kTensor;
                break;
            case 6:
                v.kind = AttrValue::kFloats;
                break;
            case 7:
                v.kind = AttrValue::kInts;
                break;
            default:
                break;
            }
            break;
        }
        default:
            pb.skip();
            break;
        }
    }
    return {std::move(name), std::move(v)};
}

GraphNode parse_node(const std::uint8_t* data, std::size_t size) {
    GraphNode n;
    Pb pb(data, size);
    while (!pb.done()) {
        switch (pb.next_field()) {
        case 1:
            n.inputs.push_back(pb.str());
            break;
        case 2:
            n.outputs.push_back(pb.str());
            break;
        case 3:
            n.name = pb.str();
            break;
        case 4:
            n.op_type = pb.str();
            break;
        case 5: {
            const auto [ptr, len] = pb.bytes();
            n.attrs.push_back(parse_attr(ptr, len));
            break;
        }
        default:
            pb.skip();
            break;
        }
    }
    return n;
}

std::pair<std::string, Shape> parse_value_info(const std::uint8_t* data, std::size_t size) {
    std::string name;
    Shape shape;
    Pb pb(data, size);
    while (!pb.done()) {
        switch (pb.next_field()) {
        case 1:
            name = pb.str();
            break;
        case 2: {
            // TypeProto -> tensor_type -> shape -> dim list.
            auto [tp, tlen] = pb.bytes();
            Pb type(tp, tlen);
            while (!type.done()) {
                if (type.next_field() != 1) {
                    type.skip();
                    continue;
                }
                auto [tt, ttlen] = type.bytes();
                Pb tensor_type(tt, ttlen);
                while (!tensor_type.done()) {
                    if (tensor_type.next_field() != 2) {
                        tensor_type.skip();
                        continue;
                    }
                    auto [sp, slen] = tensor_type.bytes();
                    Pb shape_msg(sp, slen);
                    while (!shape_msg.done()) {
                        if (shape_msg.next_field() != 1) {
                            shape_msg.skip();
                            continue;
                        }
                        auto [dp, dlen] = shape_msg.bytes();
                        Pb dim(dp, dlen);
                        std::int64_t value = -1;
                        while (!dim.done()) {
                            if (dim.next_field() == 1) {
                                value = static_cast<std::int64_t>(dim.varint());
                            } else {
                                dim.skip();
                            }
                        }
                        shape.push_back(value);
                    }
                }
            }
            break;
        }
        default:
            pb.skip();
            break;
        }
    }
    return {std::move(name), std::move(shape)};
}

// --- Executor helpers -------------------------------------------------------

const std::set<std::string>& supported_ops() {
    static const std::set<std::string> ops = {
        "Conv",      "Relu",      "Gelu",    "MaxPool", "AveragePool",
        "Gemm",      "MatMul",    "Add",     "Mul",     "Softmax",
        "LayerNormalization",     "BatchNormalization", "Reshape",
        "Transpose", "Concat",    "Slice",   "ReduceMean",
        "Flatten",   "Identity",  "Constant"};
    return ops;
}

std::int64_t attr_int(const GraphNode& n, const std::string& key, std::int64_t def) {
    const AttrValue* a = n.attr(key);
    return a == nullptr ? def : a->i;
}

float attr_float(const GraphNode& n, const std::string& key, float def) {
    const AttrValue* a = n.attr(key);
    return a == nullptr ? def : a->f;
}

std::vector<std::int64_t> attr_ints(const GraphNode& n, const std::string& key) {
    const AttrValue* a = n.attr(key);
    return a == nullptr ? std::vector<std::int64_t>{} : a->ints;
}

std::string attr_string(const GraphNode& n, const std::string& key, const std::string& def) {
    const AttrValue* a = n.attr(key);
    return a == nullptr ? def : a->s;
}

[[noreturn]] void unsupported(const GraphNode& n, const std::string& why) {
    throw UnsupportedError("node '" + n.name + "' (" + n.op_type + "): " + why);
}

// Symmetric [begin_h, begin_w, end_h, end_w] pads for conv and pooling.
void read_spatial_attrs(const GraphNode& n, int& stride_h, int& stride_w, int& pad_h, int& pad_w) {
    auto strides = attr_ints(n, "strides");
    if (strides.empty()) {
        strides = {1, 1};
    }
    if (strides.size() != 2) {
        unsupported(n, "only 2-D strides are supported");
    }
    auto pads = attr_ints(n, "pads");
    if (pads.empty()) {
        pads = {0, 0, 0, 0};
    }
    if (pads.size() != 4 || pads[0] != pads[2] || pads[1] != pads[3]) {
        unsupported(n, "only symmetric 2-D pads are supported");
    }
    for (const std::int64_t d : attr_ints(n, "dilations")) {
        if (d != 1) {
            unsupported(n, "dilations must be 1");
        }
    }
    if (attr_string(n, "auto_pad", "NOTSET") != "NOTSET") {
        unsupported(n, "auto_pad must be NOTSET");
    }
    if (attr_int(n, "ceil_mode", 0) != 0) {
        unsupported(n, "ceil_mode must be 0");
    }
    stride_h = static_cast<int>(strides[0]);
    stride_w = static_cast<int>(strides[1]);
    pad_h = static_cast<int>(pads[0]);
    pad_w = static_cast<int>(pads[1]);
}

Tensor unit_normalize(const Tensor& v, const char* what) {
    Tensor n2 = ops::reduce_sum(ops::mul(v, v));
    if (n2.values()[0] < 1e-20f) {
        throw DegenerateInputError(std::string(what) + ": embedding collapsed to zero");
    }
    return ops::div(v, ops::reshape(ops::sqrt(n2), {1}));
}

} // namespace

const AttrValue* GraphNode::attr(const std::string& key) const {
    for (const auto& [name, value] : attrs) {
        if (name == key) {
            return &value;
        }
    }
    return nullptr;
}

EncoderGraph EncoderGraph::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("EncoderGraph::load: cannot open " + path);
    }
    std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    std::pair<const std::uint8_t*, std::size_t> graph_bytes{nullptr, 0};
    Pb model(blob.data(), blob.size());
    while (!model.done()) {
        if (model.next_field() == 7) {
            graph_bytes = model.bytes();
        } else {
            model.skip();
        }
    }
    if (graph_bytes.first == nullptr) {
        throw ParseError("EncoderGraph::load: " + path + " has no graph");
    }

    EncoderGraph g;
    std::set<std::string> initializer_names;
    Pb graph(graph_bytes.first, graph_bytes.second);
    while (!graph.done()) {
        switch (graph.next_field()) {
        case 1: {
            const auto [ptr, len] = graph.bytes();
            g.nodes_.push_back(parse_node(ptr, len));
            break;
        }
        case 5: {
            const auto [ptr, len] = graph.bytes();
            TensorData t = parse_tensor(ptr, len);
            initializer_names.insert(t.name);
            if (t.is_float) {
                std::int64_t numel = 1;
                for (const std::int64_t d : t.dims) {
                    numel *= d;
                }
                if (numel != static_cast<std::int64_t>(t.floats.size())) {
                    throw ParseError("EncoderGraph::load: initializer '" + t.name +
                                     "' size does not match its dims");
                }
                g.const_tensors_.emplace(t.name, Tensor::from_data(t.dims, std::move(t.floats)));
            } else {
                g.const_ints_.emplace(t.name, std::move(t.ints));
            }
            break;
        }
        case 11: {
            const auto [ptr, len] = graph.bytes();
            g.inputs_.push_back(parse_value_info(ptr, len));
            break;
        }
        case 12: {
            const auto [ptr, len] = graph.bytes();
            g.outputs_.push_back(parse_value_info(ptr, len));
            break;
        }
        default:
            graph.skip();
            break;
        }
    }

    for (const GraphNode& n : g.nodes_) {
        if (supported_ops().count(n.op_type) == 0) {
            throw UnsupportedError("EncoderGraph::load: unsupported op '" + n.op_type + "'");
        }
    }
    // Initializers double as defaults for declared inputs; drop them from the
    // caller-facing input list.
    std::erase_if(g.inputs_,
                  [&](const auto& in) { return initializer_names.count(in.first) > 0; });
    return g;
}

bool EncoderGraph::defines(const std::string& name) const {
    if (const_tensors_.count(name) > 0 || const_ints_.count(name) > 0) {
        return true;
    }
    for (const GraphNode& n : nodes_) {
        for (const std::string& out : n.outputs) {
            if (out == name) {
                return true;
            }
        }
    }
    return false;
}

std::vector<Tensor>
EncoderGraph::execute(const std::vector<std::pair<std::string, Tensor>>& inputs,
                      std::span<const std::string> fetch) const {
    std::map<std::string, Tensor> env = const_tensors_;
    std::map<std::string, std::vector<std::int64_t>> ints = const_ints_;

    for (const auto& [name, tensor] : inputs) {
        const auto declared =
            std::find_if(inputs_.begin(), inputs_.end(),
                         [&](const auto& in) { return in.first == name; });
        if (declared == inputs_.end()) {
            throw ContractError("EncoderGraph::execute: '" + name + "' is not a graph input");
        }
        const Shape& want = declared->second;
        if (!want.empty()) {
            const Shape& got = tensor.shape();
            bool ok = want.size() == got.size();
            for (std::size_t d = 0; ok && d < want.size(); ++d) {
                ok = want[d] < 0 || want[d] == got[d];
            }
            if (!ok) {
                throw ShapeError("EncoderGraph::execute: input '" + name +
                                 "' does not match the declared shape");
            }
        }
        env.insert_or_assign(name, tensor);
    }

    auto get = [&](const std::string& name) -> const Tensor& {
        const auto it = env.find(name);
        if (it == env.end()) {
            throw ContractError("EncoderGraph::execute: tensor '" + name + "' is not available");
        }
        return it->second;
    };
    auto get_ints = [&](const GraphNode& n, const std::string& name) -> std::vector<std::int64_t> {
        const auto it = ints.find(name);
        if (it == ints.end()) {
            unsupported(n, "input '" + name + "' must be a constant int64 tensor");
        }
        return it->second;
    };

    for (const GraphNode& n : nodes_) {
        if (n.outputs.empty()) {
            unsupported(n, "node has no outputs");
        }
        const std::string& out = n.outputs[0];
        if (n.op_type == "Conv") {
            ops::Conv2dSpec spec;
            read_spatial_attrs(n, spec.stride_h, spec.stride_w, spec.pad_h, spec.pad_w);
            if (attr_int(n, "group", 1) != 1) {
                unsupported(n, "group must be 1");
            }
            const Tensor& x = get(n.inputs.at(0));
            const Tensor& w = get(n.inputs.at(1));
            env.insert_or_assign(out, n.inputs.size() > 2
                                          ? ops::conv2d(x, w, get(n.inputs[2]), spec)
                                          : ops::conv2d(x, w, spec));
        } else if (n.op_type == "Relu") {
            env.insert_or_assign(out, ops::relu(get(n.inputs.at(0))));
        } else if (n.op_type == "Gelu") {
            if (attr_string(n, "approximate", "none") != "none") {
                unsupported(n, "only exact gelu is supported");
            }
            env.insert_or_assign(out, ops::gelu(get(n.inputs.at(0))));
        } else if (n.op_type == "MaxPool" || n.op_type == "AveragePool") {
            ops::Pool2dSpec spec;
            read_spatial_attrs(n, spec.stride_h, spec.stride_w, spec.pad_h, spec.pad_w);
            const auto kernel = attr_ints(n, "kernel_shape");
            if (kernel.size() != 2) {
                unsupported(n, "kernel_shape must be 2-D");
            }
            spec.kernel_h = static_cast<int>(kernel[0]);
            spec.kernel_w = static_cast<int>(kernel[1]);
            const Tensor& x = get(n.inputs.at(0));
            if (n.op_type == "MaxPool") {
                env.insert_or_assign(out, ops::maxpool2d(x, spec));
            } else {
                env.insert_or_assign(
                    out, ops::avgpool2d(x, spec, attr_int(n, "count_include_pad", 0) != 0));
            }
        } else if (n.op_type == "Gemm") {
            if (attr_float(n, "alpha", 1.0f) != 1.0f || attr_float(n, "beta", 1.0f) != 1.0f) {
                unsupported(n, "alpha and beta must be 1");
            }
            if (attr_int(n, "transA", 0) != 0) {
                unsupported(n, "transA must be 0");
            }
            Tensor b = get(n.inputs.at(1));
            if (attr_int(n, "transB", 0) != 0) {
                b = ops::transpose(b, {1, 0});
            }
            Tensor y = ops::matmul(get(n.inputs.at(0)), b);
            if (n.inputs.size() > 2) {
                y = ops::add(y, get(n.inputs[2]));
            }
            env.insert_or_assign(out, y);
        } else if (n.op_type == "MatMul") {
            env.insert_or_assign(out, ops::matmul(get(n.inputs.at(0)), get(n.inputs.at(1))));
        } else if (n.op_type == "Add") {
            env.insert_or_assign(out, ops::add(get(n.inputs.at(0)), get(n.inputs.at(1))));
        } else if (n.op_type == "Mul") {
            env.insert_or_assign(out, ops::mul(get(n.inputs.at(0)), get(n.inputs.at(1))));
        } else if (n.op_type == "Softmax") {
            env.insert_or_assign(out, ops::softmax(get(n.inputs.at(0)), attr_int(n, "axis", -1)));
        } else if (n.op_type == "LayerNormalization") {
            const Tensor& x = get(n.inputs.at(0));
            const Tensor& scale = get(n.inputs.at(1));
            const Tensor bias =
                n.inputs.size() > 2 ? get(n.inputs[2]) : Tensor::zeros(scale.shape());
            env.insert_or_assign(out, ops::layernorm(x, scale, bias, attr_int(n, "axis", -1),
                                                     attr_float(n, "epsilon", 1e-5f)));
        } else if (n.op_type == "BatchNormalization") {
            if (attr_int(n, "training_mode", 0) != 0) {
                unsupported(n, "training_mode must be 0");
            }
            env.insert_or_assign(
                out, ops::batchnorm_inference(get(n.inputs.at(0)), get(n.inputs.at(1)),
                                              get(n.inputs.at(2)), get(n.inputs.at(3)),
                                              get(n.inputs.at(4)),
                                              attr_float(n, "epsilon", 1e-5f)));
        } else if (n.op_type == "Reshape") {
            if (attr_int(n, "allowzero", 0) != 0) {
                unsupported(n, "allowzero must be 0");
            }
            const Tensor& x = get(n.inputs.at(0));
            Shape shape = get_ints(n, n.inputs.at(1));
            for (std::size_t d = 0; d < shape.size(); ++d) {
                if (shape[d] == 0) {
                    if (d >= x.shape().size()) {
                        throw ShapeError("EncoderGraph::execute: Reshape zero extent " +
                                         std::to_string(d) + " has no source dimension");
                    }
                    shape[d] = x.shape()[d];
                }
            }
            env.insert_or_assign(out, ops::reshape(x, shape));
        } else if (n.op_type == "Transpose") {
            const Tensor& x = get(n.inputs.at(0));
            std::vector<std::int64_t> perm = attr_ints(n, "perm");
            if (perm.empty()) {
                for (std::int64_t d = static_cast<std::int64_t>(x.shape().size()) - 1; d >= 0;
                     --d) {
                    perm.push_back(d);
                }
            }
            env.insert_or_assign(out, ops::transpose(x, perm));
        } else if (n.op_type == "Concat") {
            const AttrValue* axis = n.attr("axis");
            if (axis == nullptr) {
                unsupported(n, "axis attribute is required");
            }
            std::vector<Tensor> parts;
            parts.reserve(n.inputs.size());
            for (const std::string& name : n.inputs) {
                parts.push_back(get(name));
            }
            env.insert_or_assign(out, ops::concat(parts, axis->i));
        } else if (n.op_type == "Slice") {
            const Tensor& x = get(n.inputs.at(0));
            const auto starts = get_ints(n, n.inputs.at(1));
            const auto ends = get_ints(n, n.inputs.at(2));
            std::vector<std::int64_t> axes;
            if (n.inputs.size() > 3) {
                axes = get_ints(n, n.inputs[3]);
            } else {
                for (std::size_t d = 0; d < starts.size(); ++d) {
                    axes.push_back(static_cast<std::int64_t>(d));
                }
            }
            std::vector<std::int64_t> steps;
            if (n.inputs.size() > 4) {
                steps = get_ints(n, n.inputs[4]);
            } else {
                steps.assign(starts.size(), 1);
            }
            env.insert_or_assign(out, ops::slice(x, starts, ends, axes, steps));
        } else if (n.op_type == "ReduceMean") {
            const Tensor& x = get(n.inputs.at(0));
            std::vector<std::int64_t> axes = attr_ints(n, "axes");
            if (axes.empty() && n.inputs.size() > 1) {
                axes = get_ints(n, n.inputs[1]);
            }
            if (axes.empty()) {
                for (std::size_t d = 0; d < x.shape().size(); ++d) {
                    axes.push_back(static_cast<std::int64_t>(d));
                }
            }
            env.insert_or_assign(out,
                                 ops::reduce_mean(x, axes, attr_int(n, "keepdims", 1) != 0));
        } else if (n.op_type == "Flatten") {
            const Tensor& x = get(n.inputs.at(0));
            const std::int64_t rank = static_cast<std::int64_t>(x.shape().size());
            std::int64_t axis = attr_int(n, "axis", 1);
            if (axis < 0) {
                axis += rank;
            }
            if (axis < 0 || axis > rank) {
                throw ShapeError("EncoderGraph::execute: Flatten axis out of range");
            }
            std::int64_t outer = 1;
            for (std::int64_t d = 0; d < axis; ++d) {
                outer *= x.shape()[static_cast<std::size_t>(d)];
            }
            env.insert_or_assign(out, ops::reshape(x, {outer, -1}));
        } else if (n.op_type == "Identity") {
            env.insert_or_assign(out, get(n.inputs.at(0)));
        } else if (n.op_type == "Constant") {
            const AttrValue* value = n.attr("value");
            if (value == nullptr || value->kind != AttrValue::kTensor) {
                unsupported(n, "only the tensor 'value' attribute is supported");
            }
            const TensorData& t = value->tensor;
            if (t.is_float) {
                env.insert_or_assign(out, Tensor::from_data(t.dims, t.floats));
            } else {
                ints.insert_or_assign(out, t.ints);
            }
        } else {
            unsupported(n, "op is outside the supported subset");
        }
    }

    std::vector<Tensor> results;
    results.reserve(fetch.size());
    for (const std::string& name : fetch) {
        results.push_back(get(name));
    }
    return results;
}

OnnxEncoder::OnnxEncoder(const std::string& model_path) : graph_(EncoderGraph::load(model_path)) {
    const std::string sidecar = model_path + ".json";
    std::ifstream in(sidecar, std::ios::binary);
    if (!in) {
        throw IoError("OnnxEncoder: cannot open metadata sidecar " + sidecar);
    }
    nlohmann::json doc;
    try {
        in >> doc;
        input_size_ = doc.at("input_size").get<std::int64_t>();
        const auto mean = doc.at("mean").get<std::vector<float>>();
        const auto stddev = doc.at("std").get<std::vector<float>>();
        if (mean.size() != 3 || stddev.size() != 3) {
            throw ParseError("OnnxEncoder: mean and std must have 3 channels");
        }
        mean_ = Tensor::from_data({3, 1, 1}, mean);
        std_ = Tensor::from_data({3, 1, 1}, stddev);
        tap_names_ = doc.at("taps").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("OnnxEncoder: " + sidecar + ": " + e.what());
    }
    if (input_size_ < 1) {
        throw ConfigError("OnnxEncoder: input_size must be positive");
    }
    if (graph_.inputs().size() != 1 || graph_.outputs().empty()) {
        throw ConfigError("OnnxEncoder: graph must declare one input and at least one output");
    }
    for (const std::string& tap : tap_names_) {
        if (!graph_.defines(tap)) {
            throw ConfigError("OnnxEncoder: tap '" + tap + "' is not produced by the graph");
        }
    }
    embed_dim_ = 1;
    for (const std::int64_t d : graph_.outputs()[0].second) {
        if (d < 0) {
            throw ConfigError("OnnxEncoder: the embedding output shape must be static");
        }
        embed_dim_ *= d;
    }
    if (embed_dim_ < 1) {
        throw ConfigError("OnnxEncoder: the embedding output is empty");
    }
}

Tensor OnnxEncoder::normalized_input(const Tensor& img) const {
    if (img.shape() != Shape{3, input_size_, input_size_}) {
        std::ostringstream msg;
        msg << "OnnxEncoder: expected (3," << input_size_ << "," << input_size_ << ") input";
        throw ShapeError(msg.str());
    }
    const Tensor x = ops::div(ops::sub(img, mean_), std_);
    return ops::reshape(x, {1, 3, input_size_, input_size_});
}

Tensor OnnxEncoder::embed(const Tensor& img) const {
    const std::string fetch[] = {graph_.outputs()[0].first};
    const std::vector<Tensor> outs =
        graph_.execute({{graph_.inputs()[0].first, normalized_input(img)}}, fetch);
    return unit_normalize(ops::reshape(outs[0], {embed_dim_}), "OnnxEncoder::embed");
}

std::vector<std::pair<std::string, Tensor>> OnnxEncoder::taps(const Tensor& img) const {
    const std::vector<Tensor> maps =
        graph_.execute({{graph_.inputs()[0].first, normalized_input(img)}}, tap_names_);
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t k = 0; k < maps.size(); ++k) {
        const Shape& s = maps[k].shape();
        if (s.size() != 4 || s[0] != 1) {
            throw ShapeError("OnnxEncoder: tap '" + tap_names_[k] + "' is not a (1,C,H,W) map");
        }
        out.emplace_back(tap_names_[k], ops::reshape(maps[k], {s[1], s[2], s[3]}));
    }
    return out;
}

} // namespace strokesynth
