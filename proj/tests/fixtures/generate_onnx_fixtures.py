# Copyright (c) 2026 strokesynth contributors
# SPDX-License-Identifier: Apache-2.0
"""Writes the ONNX fixture graphs and their reference outputs.

The model files are emitted by a minimal protobuf writer so the fixtures do
not depend on any exporter; the expected outputs come from torch, which acts
as the independent reference runtime. Rerunning the script reproduces the
committed bytes exactly.
"""

import json
import pathlib
import struct

import numpy as np
import torch
import torch.nn.functional as F

OUT_DIR = pathlib.Path(__file__).resolve().parent / "onnx"

# --- protobuf wire helpers --------------------------------------------------


def varint(value: int) -> bytes:
    value &= (1 << 64) - 1
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def tag(field: int, wire: int) -> bytes:
    return varint((field << 3) | wire)


def field_varint(field: int, value: int) -> bytes:
    return tag(field, 0) + varint(value)


def field_bytes(field: int, payload: bytes) -> bytes:
    return tag(field, 2) + varint(len(payload)) + payload


def field_string(field: int, text: str) -> bytes:
    return field_bytes(field, text.encode())


def field_float(field: int, value: float) -> bytes:
    return tag(field, 5) + struct.pack("<f", value)


def packed_int64(field: int, values) -> bytes:
    return field_bytes(field, b"".join(varint(v) for v in values))


# --- ONNX message builders ---------------------------------------------------


def tensor_proto(name: str, array: np.ndarray) -> bytes:
    if array.dtype == np.float32:
        dtype, raw = 1, array.tobytes()
    elif array.dtype == np.int64:
        dtype, raw = 7, array.tobytes()
    else:
        raise ValueError(f"unsupported dtype {array.dtype}")
    out = b"".join(field_varint(1, d) for d in array.shape)
    out += field_varint(2, dtype)
    out += field_string(8, name)
    out += field_bytes(9, raw)
    return out


def attr_int(name: str, value: int) -> bytes:
    return field_bytes(5, field_string(1, name) + field_varint(3, value) + field_varint(20, 2))


def attr_float(name: str, value: float) -> bytes:
    return field_bytes(5, field_string(1, name) + field_float(2, value) + field_varint(20, 1))


def attr_ints(name: str, values) -> bytes:
    return field_bytes(5, field_string(1, name) + packed_int64(8, values) + field_varint(20, 7))


def node(op: str, inputs, outputs, name: str, attrs=b"") -> bytes:
    out = b"".join(field_string(1, i) for i in inputs)
    out += b"".join(field_string(2, o) for o in outputs)
    out += field_string(3, name)
    out += field_string(4, op)
    out += attrs
    return field_bytes(1, out)


def value_info(name: str, shape) -> bytes:
    dims = b"".join(field_bytes(1, field_varint(1, d)) for d in shape)
    tensor_type = field_varint(1, 1) + field_bytes(2, dims)
    return field_string(1, name) + field_bytes(2, field_bytes(1, tensor_type))


def model(graph_name: str, nodes, initializers, inputs, outputs) -> bytes:
    graph = b"".join(nodes)
    graph += field_string(2, graph_name)
    graph += b"".join(field_bytes(5, tensor_proto(n, a)) for n, a in initializers)
    graph += b"".join(field_bytes(11, value_info(n, s)) for n, s in inputs)
    graph += b"".join(field_bytes(12, value_info(n, s)) for n, s in outputs)
    opset = field_string(1, "") + field_varint(2, 17)
    return field_varint(1, 8) + field_bytes(8, opset) + field_bytes(7, graph)


# --- fixtures ----------------------------------------------------------------


def write_fixture(name: str, model_bytes: bytes, x: np.ndarray, y: torch.Tensor,
                  input_name: str, output_name: str) -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / f"{name}.onnx").write_bytes(model_bytes)
    y32 = y.detach().numpy().astype(np.float32)
    io = {
        "input_name": input_name,
        "input_shape": list(x.shape),
        "input": [float(v) for v in x.flatten()],
        "output_name": output_name,
        "output_shape": list(y32.shape),
        "output": [float(v) for v in y32.flatten()],
    }
    (OUT_DIR / f"{name}.io.json").write_text(json.dumps(io) + "\n")
    print(f"{name}: in {list(x.shape)} -> out {list(y32.shape)}")


def conv_relu() -> None:
    rs = np.random.RandomState(7)
    x = rs.uniform(-1, 1, (1, 3, 8, 8)).astype(np.float32)
    w = rs.uniform(-0.5, 0.5, (4, 3, 3, 3)).astype(np.float32)
    b = rs.uniform(-0.5, 0.5, (4,)).astype(np.float32)
    y = F.relu(F.conv2d(torch.from_numpy(x), torch.from_numpy(w), torch.from_numpy(b),
                        stride=2, padding=1))
    m = model(
        "conv_relu",
        [
            node("Conv", ["x", "w", "b"], ["conv_out"], "conv0",
                 attr_ints("strides", [2, 2]) + attr_ints("pads", [1, 1, 1, 1]) +
                 attr_ints("kernel_shape", [3, 3])),
            node("Relu", ["conv_out"], ["y"], "relu0"),
        ],
        [("w", w), ("b", b)],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("conv_relu", m, x, y, "x", "y")


def maxpool() -> None:
    # Reject inputs whose pooling windows have near-tied maxima; the gradient
    # check perturbs by ~1e-3 and must not flip any argmax.
    seed = 11
    while True:
        rs = np.random.RandomState(seed)
        x = rs.uniform(-1, 1, (1, 2, 9, 9)).astype(np.float32)
        xt = torch.from_numpy(x)
        padded = F.pad(xt, (1, 1, 1, 1), value=-torch.inf)
        windows = padded.unfold(2, 3, 2).unfold(3, 3, 2).reshape(1, 2, 5, 5, 9)
        top2 = windows.topk(2, dim=-1).values
        if (top2[..., 0] - top2[..., 1]).min() > 5e-3:
            break
        seed += 1
    y = F.max_pool2d(xt, 3, stride=2, padding=1)
    m = model(
        "maxpool",
        [
            node("MaxPool", ["x"], ["y"], "pool0",
                 attr_ints("kernel_shape", [3, 3]) + attr_ints("strides", [2, 2]) +
                 attr_ints("pads", [1, 1, 1, 1])),
        ],
        [],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("maxpool", m, x, y, "x", "y")


def gemm_softmax() -> None:
    rs = np.random.RandomState(23)
    x = rs.uniform(-1, 1, (1, 4, 2, 2)).astype(np.float32)
    w = rs.uniform(-0.7, 0.7, (8, 16)).astype(np.float32)
    c = rs.uniform(-0.5, 0.5, (8,)).astype(np.float32)
    flat = torch.from_numpy(x).flatten(1)
    y = F.softmax(flat @ torch.from_numpy(w).T + torch.from_numpy(c), dim=-1)
    m = model(
        "gemm_softmax",
        [
            node("Flatten", ["x"], ["flat"], "flatten0", attr_int("axis", 1)),
            node("Gemm", ["flat", "w", "c"], ["logits"], "gemm0", attr_int("transB", 1)),
            node("Softmax", ["logits"], ["y"], "softmax0", attr_int("axis", -1)),
        ],
        [("w", w), ("c", c)],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("gemm_softmax", m, x, y, "x", "y")


def layernorm_gelu() -> None:
    rs = np.random.RandomState(31)
    x = rs.uniform(-1, 1, (1, 12)).astype(np.float32)
    w = rs.uniform(-0.7, 0.7, (12, 6)).astype(np.float32)
    b = rs.uniform(-0.5, 0.5, (6,)).astype(np.float32)
    scale = rs.uniform(0.5, 1.5, (6,)).astype(np.float32)
    shift = rs.uniform(-0.5, 0.5, (6,)).astype(np.float32)
    h = torch.from_numpy(x) @ torch.from_numpy(w) + torch.from_numpy(b)
    y = F.gelu(F.layer_norm(h, (6,), torch.from_numpy(scale), torch.from_numpy(shift), 1e-5))
    m = model(
        "layernorm_gelu",
        [
            node("MatMul", ["x", "w"], ["mm"], "matmul0"),
            node("Add", ["mm", "b"], ["pre"], "add0"),
            node("LayerNormalization", ["pre", "scale", "shift"], ["normed"], "ln0",
                 attr_int("axis", -1) + attr_float("epsilon", 1e-5)),
            node("Gelu", ["normed"], ["y"], "gelu0"),
        ],
        [("w", w), ("b", b), ("scale", scale), ("shift", shift)],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("layernorm_gelu", m, x, y, "x", "y")


def shapes_net() -> None:
    rs = np.random.RandomState(41)
    x = rs.uniform(-1, 1, (1, 2, 4, 4)).astype(np.float32)
    xt = torch.from_numpy(x)
    moved = xt.permute(0, 2, 3, 1).reshape(1, 16, 2)
    sliced = moved[:, 0:16:2, :]
    y = torch.cat([sliced, sliced], dim=2)
    m = model(
        "shapes_net",
        [
            node("Transpose", ["x"], ["moved"], "transpose0",
                 attr_ints("perm", [0, 2, 3, 1])),
            node("Reshape", ["moved", "new_shape"], ["flat"], "reshape0"),
            node("Slice", ["flat", "starts", "ends", "axes", "steps"], ["sliced"], "slice0"),
            node("Concat", ["sliced", "sliced"], ["joined"], "concat0", attr_int("axis", 2)),
            node("Identity", ["joined"], ["y"], "identity0"),
        ],
        [
            ("new_shape", np.array([1, 16, 2], dtype=np.int64)),
            ("starts", np.array([0], dtype=np.int64)),
            ("ends", np.array([16], dtype=np.int64)),
            ("axes", np.array([1], dtype=np.int64)),
            ("steps", np.array([2], dtype=np.int64)),
        ],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("shapes_net", m, x, y, "x", "y")


def misc_net() -> None:
    rs = np.random.RandomState(43)
    x = rs.uniform(-1, 1, (1, 3, 6, 6)).astype(np.float32)
    scale = rs.uniform(0.5, 1.5, (3,)).astype(np.float32)
    shift = rs.uniform(-0.5, 0.5, (3,)).astype(np.float32)
    mean = rs.uniform(-0.2, 0.2, (3,)).astype(np.float32)
    var = rs.uniform(0.5, 1.5, (3,)).astype(np.float32)
    gain = rs.uniform(0.5, 1.5, (1, 3, 1, 1)).astype(np.float32)
    xt = torch.from_numpy(x)
    normed = F.batch_norm(xt, torch.from_numpy(mean), torch.from_numpy(var),
                          torch.from_numpy(scale), torch.from_numpy(shift),
                          training=False, eps=1e-5)
    pooled = F.avg_pool2d(normed * torch.from_numpy(gain), 2, stride=2)
    y = pooled.mean(dim=(2, 3))
    gain_tensor = field_bytes(5, field_string(1, "value") +
                              field_bytes(5, tensor_proto("gain_value", gain)) +
                              field_varint(20, 4))
    m = model(
        "misc_net",
        [
            node("BatchNormalization", ["x", "scale", "shift", "mean", "var"], ["normed"],
                 "bn0", attr_float("epsilon", 1e-5)),
            node("Constant", [], ["gain"], "const0", gain_tensor),
            node("Mul", ["normed", "gain"], ["scaled"], "mul0"),
            node("AveragePool", ["scaled"], ["pooled"], "pool0",
                 attr_ints("kernel_shape", [2, 2]) + attr_ints("strides", [2, 2])),
            node("ReduceMean", ["pooled"], ["y"], "mean0",
                 attr_ints("axes", [2, 3]) + attr_int("keepdims", 0)),
        ],
        [("scale", scale), ("shift", shift), ("mean", mean), ("var", var)],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("misc_net", m, x, y, "x", "y")


def tiny_encoder() -> None:
    rs = np.random.RandomState(53)
    x = rs.uniform(0, 1, (1, 3, 16, 16)).astype(np.float32)
    w1 = rs.uniform(-0.4, 0.4, (4, 3, 3, 3)).astype(np.float32)
    w2 = rs.uniform(-0.4, 0.4, (8, 4, 3, 3)).astype(np.float32)
    wg = rs.uniform(-0.7, 0.7, (5, 8)).astype(np.float32)
    cg = rs.uniform(-0.3, 0.3, (5,)).astype(np.float32)
    h1 = F.relu(F.conv2d(torch.from_numpy(x), torch.from_numpy(w1), stride=2, padding=1))
    h2 = F.relu(F.conv2d(h1, torch.from_numpy(w2), stride=2, padding=1))
    y = h2.mean(dim=(2, 3)) @ torch.from_numpy(wg).T + torch.from_numpy(cg)
    m = model(
        "tiny_encoder",
        [
            node("Conv", ["x", "w1"], ["pre1"], "conv1",
                 attr_ints("strides", [2, 2]) + attr_ints("pads", [1, 1, 1, 1])),
            node("Relu", ["pre1"], ["feat1"], "relu1"),
            node("Conv", ["feat1", "w2"], ["pre2"], "conv2",
                 attr_ints("strides", [2, 2]) + attr_ints("pads", [1, 1, 1, 1])),
            node("Relu", ["pre2"], ["feat2"], "relu2"),
            node("ReduceMean", ["feat2"], ["pooled"], "gap",
                 attr_ints("axes", [2, 3]) + attr_int("keepdims", 0)),
            node("Gemm", ["pooled", "wg", "cg"], ["y"], "head", attr_int("transB", 1)),
        ],
        [("w1", w1), ("w2", w2), ("wg", wg), ("cg", cg)],
        [("x", x.shape)],
        [("y", tuple(y.shape))],
    )
    write_fixture("tiny_encoder", m, x, y, "x", "y")
    sidecar = {
        "input_size": 16,
        "mean": [0.48, 0.46, 0.41],
        "std": [0.27, 0.26, 0.28],
        "taps": ["feat1", "feat2"],
    }
    (OUT_DIR / "tiny_encoder.onnx.json").write_text(json.dumps(sidecar, indent=2) + "\n")


def unsupported_op() -> None:
    m = model(
        "tanh_net",
        [node("Tanh", ["x"], ["y"], "tanh0")],
        [],
        [("x", (1, 4))],
        [("y", (1, 4))],
    )
    (OUT_DIR / "unsupported_op.onnx").write_bytes(m)
    print("unsupported_op: written")


if __name__ == "__main__":
    conv_relu()
    maxpool()
    gemm_softmax()
    layernorm_gelu()
    shapes_net()
    misc_net()
    tiny_encoder()
    unsupported_op()
