"""Minimal ONNX protobuf encoder for building test fixture models.

Writes just enough of the wire format to produce valid single-graph models:
float tensors, int/ints/float/tensor attributes, dynamic batch dims. Kept
independent of the package's decoder so fixtures exercise it end to end.
"""

from __future__ import annotations

import struct

import numpy as np

FLOAT = 1


def _varint(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _tag(field: int, wire: int) -> bytes:
    return _varint((field << 3) | wire)


def _len_delimited(field: int, payload: bytes) -> bytes:
    return _tag(field, 2) + _varint(len(payload)) + payload


def _string(field: int, text: str) -> bytes:
    return _len_delimited(field, text.encode("utf-8"))


def _int_field(field: int, value: int) -> bytes:
    return _tag(field, 0) + _varint(value)


def tensor(name: str, array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype=np.float32)
    payload = b"".join(_int_field(1, d) for d in array.shape)
    payload += _int_field(2, FLOAT)
    payload += _string(8, name)
    payload += _len_delimited(9, array.astype("<f4").tobytes())
    return payload


def attr_int(name: str, value: int) -> bytes:
    return _string(1, name) + _int_field(3, value) + _int_field(20, 2)


def attr_ints(name: str, values) -> bytes:
    body = _string(1, name)
    for v in values:
        body += _int_field(8, v)
    return body + _int_field(20, 7)


def attr_float(name: str, value: float) -> bytes:
    return (_string(1, name) + _tag(2, 5) + struct.pack("<f", value)
            + _int_field(20, 1))


def attr_tensor(name: str, array: np.ndarray) -> bytes:
    return (_string(1, name) + _len_delimited(5, tensor("", array))
            + _int_field(20, 4))


def node(op_type: str, inputs, outputs, *attrs: bytes) -> bytes:
    payload = b"".join(_string(1, i) for i in inputs)
    payload += b"".join(_string(2, o) for o in outputs)
    payload += _string(4, op_type)
    payload += b"".join(_len_delimited(5, a) for a in attrs)
    return payload


def value_info(name: str, shape) -> bytes:
    dims = b""
    for dim in shape:
        if isinstance(dim, str):
            dims += _len_delimited(1, _string(2, dim))
        else:
            dims += _len_delimited(1, _int_field(1, dim))
    tensor_type = _int_field(1, FLOAT) + _len_delimited(2, dims)
    type_proto = _len_delimited(1, tensor_type)
    return _string(1, name) + _len_delimited(2, type_proto)


def model(nodes, inputs, outputs, initializers=(), opset: int = 13) -> bytes:
    graph = b"".join(_len_delimited(1, n) for n in nodes)
    graph += _string(2, "fixture")
    graph += b"".join(_len_delimited(5, t) for t in initializers)
    graph += b"".join(_len_delimited(11, vi) for vi in inputs)
    graph += b"".join(_len_delimited(12, vi) for vi in outputs)
    opset_id = _string(1, "") + _int_field(2, opset)
    return (_int_field(1, 8)  # ir_version
            + _string(2, "sess-test-fixtures")
            + _len_delimited(7, graph)
            + _len_delimited(8, opset_id))


def quadrant_classifier_bytes(side: int = 224) -> bytes:
    """A Conv+Flatten+Gemm graph computing exactly the quadrant-mean logits
    of the deterministic mock backend."""
    half = side // 2
    conv_w = np.full((4, 3, half, half), 1.0 / (3 * half * half), dtype=np.float32)
    selector = np.zeros((4, 16), dtype=np.float32)
    for q in range(4):
        # flatten index of channel q at spatial quadrant q in the 2x2 output
        selector[q, q * 4 + (q // 2) * 2 + (q % 2)] = 1.0
    nodes = [
        node("Conv", ["input", "conv_w"], ["pooled"],
             attr_ints("kernel_shape", [half, half]),
             attr_ints("strides", [half, half]),
             attr_ints("pads", [0, 0, 0, 0])),
        node("Flatten", ["pooled"], ["flat"], attr_int("axis", 1)),
        node("Gemm", ["flat", "selector"], ["logits"],
             attr_int("transB", 1)),
    ]
    return model(
        nodes,
        inputs=[value_info("input", ["batch", 3, side, side])],
        outputs=[value_info("logits", ["batch", 4])],
        initializers=[tensor("conv_w", conv_w), tensor("selector", selector)],
    )


def quadrant_sidecar(side: int = 224) -> dict:
    return {
        "input_size": side,
        "mean": [0.0, 0.0, 0.0],
        "std": [1.0, 1.0, 1.0],
        "emits_logits": True,
        "labels": ["quadrant-tl", "quadrant-tr", "quadrant-bl", "quadrant-br"],
    }
