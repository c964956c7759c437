"""Self-contained ONNX model reader and numpy evaluator.

Parses the ONNX protobuf wire format directly (no protobuf dependency) and
executes inference-mode graphs with numpy kernels. Covers the operator set
emitted for standard convolutional classifiers (conv/BN/pool/residual/FC
topologies); anything else raises UnsupportedOpError naming the operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["OnnxModel", "TensorInfo", "OnnxDecodeError", "UnsupportedOpError"]


class OnnxDecodeError(ValueError):
    """File is not a readable ONNX protobuf."""


class UnsupportedOpError(ValueError):
    """Graph uses an operator outside the implemented kernel set."""


# ---------------------------------------------------------------------------
# protobuf wire format
# ---------------------------------------------------------------------------

_WIRE_VARINT = 0
_WIRE_I64 = 1
_WIRE_LEN = 2
_WIRE_I32 = 5


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise OnnxDecodeError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise OnnxDecodeError("varint overflow")


def _signed(value: int) -> int:
    # int64 fields use two's complement in the 64-bit varint space
    return value - (1 << 64) if value >= (1 << 63) else value


def _fields(buf: bytes):
    """Yield (field_number, wire_type, value) triples of one message."""
    pos = 0
    while pos < len(buf):
        key, pos = _read_varint(buf, pos)
        fnum, wtype = key >> 3, key & 0x07
        if wtype == _WIRE_VARINT:
            value, pos = _read_varint(buf, pos)
        elif wtype == _WIRE_I64:
            value = buf[pos : pos + 8]
            pos += 8
        elif wtype == _WIRE_LEN:
            length, pos = _read_varint(buf, pos)
            value = buf[pos : pos + length]
            if len(value) != length:
                raise OnnxDecodeError("truncated length-delimited field")
            pos += length
        elif wtype == _WIRE_I32:
            value = buf[pos : pos + 4]
            pos += 4
        else:
            raise OnnxDecodeError(f"unsupported wire type {wtype}")
        yield fnum, wtype, value


def _packed_varints(value, wtype) -> list[int]:
    # repeated int64: either packed (length-delimited) or a lone varint
    if wtype == _WIRE_VARINT:
        return [_signed(value)]
    out = []
    pos = 0
    while pos < len(value):
        v, pos = _read_varint(value, pos)
        out.append(_signed(v))
    return out


# ---------------------------------------------------------------------------
# ONNX message parsing
# ---------------------------------------------------------------------------

_DTYPES = {
    1: np.float32,
    2: np.uint8,
    3: np.int8,
    4: np.uint16,
    5: np.int16,
    6: np.int32,
    7: np.int64,
    9: np.bool_,
    11: np.float64,
    12: np.uint32,
    13: np.uint64,
}


@dataclass
class TensorInfo:
    """Name and declared (possibly symbolic) shape of a graph input/output."""

    name: str
    shape: tuple = ()  # ints for fixed dims, strings for symbolic dims
    elem_type: int = 1


@dataclass
class _Node:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    attrs: dict
    name: str = ""


@dataclass
class _Graph:
    nodes: list[_Node] = field(default_factory=list)
    initializers: dict = field(default_factory=dict)
    inputs: list[TensorInfo] = field(default_factory=list)
    outputs: list[TensorInfo] = field(default_factory=list)
    name: str = ""


def _parse_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    data_type = 1
    raw = None
    float_data: list[np.ndarray] = []
    int_data: list[int] = []
    double_data: list[np.ndarray] = []
    name = ""
    for fnum, wtype, value in _fields(buf):
        if fnum == 1:
            dims.extend(_packed_varints(value, wtype))
        elif fnum == 2:
            data_type = value
        elif fnum == 4:
            float_data.append(np.frombuffer(value, dtype="<f4"))
        elif fnum in (5, 7):
            int_data.extend(_packed_varints(value, wtype))
        elif fnum == 8:
            name = value.decode("utf-8")
        elif fnum == 9:
            raw = value
        elif fnum == 10:
            double_data.append(np.frombuffer(value, dtype="<f8"))
        elif fnum == 13:
            raise OnnxDecodeError("externally stored tensor data is not supported")
    if data_type not in _DTYPES:
        raise OnnxDecodeError(f"unsupported tensor data type {data_type}")
    dtype = _DTYPES[data_type]
    if raw is not None:
        arr = np.frombuffer(raw, dtype=np.dtype(dtype).newbyteorder("<")).astype(dtype)
    elif float_data:
        arr = np.concatenate(float_data).astype(dtype)
    elif double_data:
        arr = np.concatenate(double_data).astype(dtype)
    else:
        arr = np.asarray(int_data, dtype=dtype)
    return name, arr.reshape(dims) if dims else arr.reshape(())


def _parse_attr(buf: bytes) -> tuple[str, object]:
    name = ""
    single = None
    ints: list[int] = []
    floats: list[float] = []
    strings: list[bytes] = []
    tensor = None
    for fnum, wtype, value in _fields(buf):
        if fnum == 1:
            name = value.decode("utf-8")
        elif fnum == 2:
            single = float(np.frombuffer(value, dtype="<f4")[0])
        elif fnum == 3:
            single = _signed(value)
        elif fnum == 4:
            single = value
        elif fnum == 5:
            tensor = _parse_tensor(value)[1]
        elif fnum == 7:
            floats.extend(np.frombuffer(value, dtype="<f4").tolist())
        elif fnum == 8:
            ints.extend(_packed_varints(value, wtype))
        elif fnum == 9:
            strings.append(value)
    if tensor is not None:
        return name, tensor
    if ints:
        return name, ints
    if floats:
        return name, floats
    if strings:
        return name, strings
    return name, single


def _parse_value_info(buf: bytes) -> TensorInfo:
    info = TensorInfo(name="")
    for fnum, _, value in _fields(buf):
        if fnum == 1:
            info.name = value.decode("utf-8")
        elif fnum == 2:
            for f2, _, v2 in _fields(value):
                if f2 == 1:  # tensor_type
                    shape: list = []
                    for f3, _, v3 in _fields(v2):
                        if f3 == 1:
                            info.elem_type = v3
                        elif f3 == 2:
                            for f4, _, v4 in _fields(v3):
                                if f4 == 1:  # dim
                                    dim: object = None
                                    for f5, _, v5 in _fields(v4):
                                        if f5 == 1:
                                            dim = _signed(v5)
                                        elif f5 == 2:
                                            dim = v5.decode("utf-8")
                                    shape.append(dim)
                    info.shape = tuple(shape)
    return info


def _parse_node(buf: bytes) -> _Node:
    node = _Node(op_type="", inputs=[], outputs=[], attrs={})
    for fnum, _, value in _fields(buf):
        if fnum == 1:
            node.inputs.append(value.decode("utf-8"))
        elif fnum == 2:
            node.outputs.append(value.decode("utf-8"))
        elif fnum == 3:
            node.name = value.decode("utf-8")
        elif fnum == 4:
            node.op_type = value.decode("utf-8")
        elif fnum == 5:
            aname, avalue = _parse_attr(value)
            node.attrs[aname] = avalue
    return node


def _parse_graph(buf: bytes) -> _Graph:
    graph = _Graph()
    for fnum, _, value in _fields(buf):
        if fnum == 1:
            graph.nodes.append(_parse_node(value))
        elif fnum == 2:
            graph.name = value.decode("utf-8")
        elif fnum == 5:
            name, arr = _parse_tensor(value)
            graph.initializers[name] = arr
        elif fnum == 11:
            graph.inputs.append(_parse_value_info(value))
        elif fnum == 12:
            graph.outputs.append(_parse_value_info(value))
    return graph


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------


def _pair(attrs: dict, key: str, default: tuple[int, int]) -> tuple[int, int]:
    value = attrs.get(key)
    if value is None:
        return default
    return int(value[0]), int(value[1])


def _pads(attrs: dict) -> tuple[int, int, int, int]:
    pads = attrs.get("pads")
    if pads is None:
        return 0, 0, 0, 0
    if len(pads) == 4:
        return tuple(int(p) for p in pads)  # (top, left, bottom, right)
    raise UnsupportedOpError(f"unsupported pads {pads}")


def _window_view(x: np.ndarray, kh: int, kw: int, sh: int, sw: int) -> np.ndarray:
    # (B, C, H, W) -> (B, C, OH, OW, kh, kw) strided windows, no copy
    view = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return view[:, :, ::sh, ::sw]


def _conv(x: np.ndarray, w: np.ndarray, b, attrs: dict) -> np.ndarray:
    sh, sw = _pair(attrs, "strides", (1, 1))
    dh, dw = _pair(attrs, "dilations", (1, 1))
    pt, pl, pb, pr = _pads(attrs)
    group = int(attrs.get("group", 1))
    if (dh, dw) != (1, 1):
        # dilate the kernel with zeros; equivalent and keeps one code path
        kh, kw = w.shape[2], w.shape[3]
        wd = np.zeros(
            (w.shape[0], w.shape[1], (kh - 1) * dh + 1, (kw - 1) * dw + 1), w.dtype
        )
        wd[:, :, ::dh, ::dw] = w
        w = wd
    kh, kw = w.shape[2], w.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    batch = xp.shape[0]
    out_ch = w.shape[0]
    windows = _window_view(xp, kh, kw, sh, sw)
    oh, ow = windows.shape[2], windows.shape[3]
    in_per_group = x.shape[1] // group
    out_per_group = out_ch // group
    out = np.empty((batch, out_ch, oh, ow), dtype=np.float32)
    for g in range(group):
        win = windows[:, g * in_per_group : (g + 1) * in_per_group]
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(batch, oh * ow, -1)
        wg = w[g * out_per_group : (g + 1) * out_per_group].reshape(out_per_group, -1)
        res = cols @ wg.T.astype(np.float32)
        out[:, g * out_per_group : (g + 1) * out_per_group] = res.transpose(
            0, 2, 1
        ).reshape(batch, out_per_group, oh, ow)
    if b is not None:
        out += b.reshape(1, -1, 1, 1)
    return out


def _pool(x: np.ndarray, attrs: dict, reduce: str) -> np.ndarray:
    kh, kw = _pair(attrs, "kernel_shape", (1, 1))
    sh, sw = _pair(attrs, "strides", (1, 1))
    pt, pl, pb, pr = _pads(attrs)
    if int(attrs.get("ceil_mode", 0)):
        h, w = x.shape[2] + pt + pb, x.shape[3] + pl + pr
        pb += (-(h - kh) % sh) if (h - kh) % sh else 0
        pr += (-(w - kw) % sw) if (w - kw) % sw else 0
    if reduce == "max":
        fill = -np.inf
    else:
        fill = 0.0
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)), constant_values=fill)
    windows = _window_view(xp, kh, kw, sh, sw)
    if reduce == "max":
        return windows.max(axis=(4, 5))
    if int(attrs.get("count_include_pad", 0)) or (pt, pl, pb, pr) == (0, 0, 0, 0):
        return windows.mean(axis=(4, 5))
    ones = np.ones((1, 1) + x.shape[2:], dtype=np.float32)
    onesp = np.pad(ones, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    counts = _window_view(onesp, kh, kw, sh, sw).sum(axis=(4, 5))
    return windows.sum(axis=(4, 5)) / counts


def _gemm(a: np.ndarray, b: np.ndarray, c, attrs: dict) -> np.ndarray:
    alpha = float(attrs.get("alpha", 1.0))
    beta = float(attrs.get("beta", 1.0))
    if int(attrs.get("transA", 0)):
        a = a.T
    if int(attrs.get("transB", 0)):
        b = b.T
    out = alpha * (a @ b)
    if c is not None:
        out = out + beta * c
    return out


def _batchnorm(x, scale, bias, mean, var, attrs) -> np.ndarray:
    eps = float(attrs.get("epsilon", 1e-5))
    shape = (1, -1) + (1,) * (x.ndim - 2)
    inv = 1.0 / np.sqrt(var + eps)
    return (x - mean.reshape(shape)) * (scale * inv).reshape(shape) + bias.reshape(shape)


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    np.exp(shifted, out=shifted)
    return shifted / shifted.sum(axis=axis, keepdims=True)


def _axes_arg(node, attrs, values, index=1):
    if len(node.inputs) > index and node.inputs[index]:
        return [int(a) for a in values[node.inputs[index]].tolist()]
    axes = attrs.get("axes")
    return None if axes is None else [int(a) for a in axes]


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


class OnnxModel:
    """A parsed ONNX graph, executable on numpy feeds.

    `inputs`/`outputs` expose the declared graph interface (initializers
    excluded). `run` returns outputs in declaration order.
    """

    def __init__(self, graph: _Graph, opset: int):
        self.graph = graph
        self.opset = opset
        init = graph.initializers
        self.inputs = [vi for vi in graph.inputs if vi.name not in init]
        self.outputs = graph.outputs

    @classmethod
    def from_bytes(cls, data: bytes) -> "OnnxModel":
        graph = None
        opset = 0
        try:
            for fnum, wtype, value in _fields(data):
                if fnum == 7 and wtype == _WIRE_LEN:
                    graph = _parse_graph(value)
                elif fnum == 8 and wtype == _WIRE_LEN:
                    domain = ""
                    version = 0
                    for f2, _, v2 in _fields(value):
                        if f2 == 1:
                            domain = v2.decode("utf-8")
                        elif f2 == 2:
                            version = v2
                    if domain in ("", "ai.onnx"):
                        opset = max(opset, version)
        except OnnxDecodeError:
            raise
        except Exception as exc:  # malformed bytes surface as decode errors
            raise OnnxDecodeError(f"not a readable ONNX model: {exc}") from exc
        if graph is None:
            raise OnnxDecodeError("file contains no ONNX graph")
        return cls(graph, opset)

    @classmethod
    def from_file(cls, path) -> "OnnxModel":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def run(self, feeds: dict) -> list[np.ndarray]:
        values: dict = dict(self.graph.initializers)
        for info in self.inputs:
            if info.name not in feeds:
                raise ValueError(f"missing feed for graph input {info.name!r}")
        values.update({k: np.asarray(v) for k, v in feeds.items()})
        for node in self.graph.nodes:
            self._execute(node, values)
        return [values[out.name] for out in self.outputs]

    def _execute(self, node: _Node, values: dict) -> None:
        op = node.op_type
        attrs = node.attrs

        def arg(i: int, optional: bool = False):
            if i >= len(node.inputs) or not node.inputs[i]:
                if optional:
                    return None
                raise OnnxDecodeError(f"{op} node missing input {i}")
            return values[node.inputs[i]]

        if op == "Conv":
            out = _conv(arg(0), arg(1), arg(2, optional=True), attrs)
        elif op == "BatchNormalization":
            out = _batchnorm(arg(0), arg(1), arg(2), arg(3), arg(4), attrs)
        elif op == "Relu":
            out = np.maximum(arg(0), 0)
        elif op == "Sigmoid":
            out = 1.0 / (1.0 + np.exp(-arg(0)))
        elif op == "Tanh":
            out = np.tanh(arg(0))
        elif op == "Clip":
            lo = arg(1, optional=True) if len(node.inputs) > 1 else attrs.get("min")
            hi = arg(2, optional=True) if len(node.inputs) > 2 else attrs.get("max")
            out = np.clip(arg(0), lo, hi)
        elif op == "MaxPool":
            out = _pool(arg(0), attrs, "max")
        elif op == "AveragePool":
            out = _pool(arg(0), attrs, "mean")
        elif op == "GlobalAveragePool":
            out = arg(0).mean(axis=(2, 3), keepdims=True)
        elif op == "Gemm":
            out = _gemm(arg(0), arg(1), arg(2, optional=True), attrs)
        elif op == "MatMul":
            out = arg(0) @ arg(1)
        elif op == "Add":
            out = arg(0) + arg(1)
        elif op == "Sub":
            out = arg(0) - arg(1)
        elif op == "Mul":
            out = arg(0) * arg(1)
        elif op == "Div":
            out = arg(0) / arg(1)
        elif op == "Flatten":
            axis = int(attrs.get("axis", 1))
            x = arg(0)
            lead = int(np.prod(x.shape[:axis])) if axis else 1
            out = x.reshape(lead, -1)
        elif op == "Reshape":
            x = arg(0)
            shape = [int(s) for s in arg(1).tolist()]
            shape = [x.shape[i] if s == 0 else s for i, s in enumerate(shape)]
            out = x.reshape(shape)
        elif op == "Transpose":
            perm = attrs.get("perm")
            out = np.transpose(arg(0), perm)
        elif op == "Concat":
            out = np.concatenate([values[name] for name in node.inputs],
                                 axis=int(attrs["axis"]))
        elif op == "Softmax":
            default_axis = -1 if self.opset >= 13 else 1
            out = _softmax(arg(0), int(attrs.get("axis", default_axis)))
        elif op in ("Identity", "Dropout"):
            out = arg(0)
        elif op == "Constant":
            out = attrs.get("value")
            if out is None:
                raise UnsupportedOpError("Constant node without tensor value")
        elif op == "Shape":
            out = np.asarray(arg(0).shape, dtype=np.int64)
        elif op == "Gather":
            out = np.take(arg(0), arg(1), axis=int(attrs.get("axis", 0)))
        elif op == "Unsqueeze":
            axes = _axes_arg(node, attrs, values)
            x = arg(0)
            for ax in sorted(axes):
                x = np.expand_dims(x, ax)
            out = x
        elif op == "Squeeze":
            axes = _axes_arg(node, attrs, values)
            out = np.squeeze(arg(0), axis=None if axes is None else tuple(axes))
        elif op == "ReduceMean":
            axes = _axes_arg(node, attrs, values)
            keep = bool(int(attrs.get("keepdims", 1)))
            out = arg(0).mean(axis=None if axes is None else tuple(axes), keepdims=keep)
        elif op == "Pad":
            out = self._pad(node, attrs, values)
        elif op == "Cast":
            out = arg(0).astype(_DTYPES.get(int(attrs.get("to", 1)), np.float32))
        else:
            raise UnsupportedOpError(f"operator {op!r} is not supported")

        outputs = [name for name in node.outputs if name]
        values[outputs[0]] = out
        for extra in outputs[1:]:  # e.g. Dropout's mask output, unused at inference
            values[extra] = out

    def _pad(self, node: _Node, attrs: dict, values: dict) -> np.ndarray:
        x = values[node.inputs[0]]
        mode = attrs.get("mode", b"constant")
        mode = mode.decode() if isinstance(mode, bytes) else mode
        if len(node.inputs) > 1 and node.inputs[1]:
            pads = [int(p) for p in values[node.inputs[1]].tolist()]
        else:
            pads = [int(p) for p in attrs.get("pads", [])]
        half = len(pads) // 2
        width = list(zip(pads[:half], pads[half:]))
        if mode == "constant":
            value = 0.0
            if len(node.inputs) > 2 and node.inputs[2]:
                value = float(np.asarray(values[node.inputs[2]]).reshape(-1)[0])
            return np.pad(x, width, constant_values=value)
        if mode == "reflect":
            return np.pad(x, width, mode="reflect")
        if mode == "edge":
            return np.pad(x, width, mode="edge")
        raise UnsupportedOpError(f"pad mode {mode!r} is not supported")
