"""Allow torch's legacy ONNX exporter to run without the `onnx` package.

The exporter serializes the model protobuf itself and imports `onnx` only to
splice in custom onnxscript functions, a no-op for standard graphs. This stub
satisfies that import and passes the already-serialized bytes through.
"""

from __future__ import annotations

import sys
import types


def install_onnx_stub() -> None:
    try:
        import onnx  # noqa: F401

        return  # real package available, nothing to do
    except ImportError:
        pass

    class _Graph:
        node = ()

    class _Model:
        graph = _Graph()
        functions: list = []

        def SerializeToString(self):  # pragma: no cover - never reached
            return b""

    stub = types.ModuleType("onnx")
    stub.load_model_from_string = lambda data: _Model()
    sys.modules["onnx"] = stub
