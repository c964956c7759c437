"""Run torch's legacy ONNX exporter without the `onnx` package installed.

torch serializes the model protobuf itself; it imports `onnx` only to splice
custom onnxscript functions into the result, which is a no-op for standard
torchvision graphs. When `onnx` is missing we register a stub whose
`load_model_from_string` reports an empty node list, so the exporter's
post-processing passes the already-serialized bytes through untouched.
"""

from __future__ import annotations

import importlib.machinery
import sys
import types


def ensure_onnx_importable() -> bool:
    """Make `import onnx` succeed; returns True when the stub was installed."""
    try:
        import onnx  # noqa: F401

        return False
    except ImportError:
        pass

    class _EmptyGraph:
        node = ()

    class _PassthroughModel:
        graph = _EmptyGraph()
        functions: list = []

        def SerializeToString(self) -> bytes:  # pragma: no cover
            raise RuntimeError(
                "stub onnx module cannot re-serialize; only passthrough "
                "export of standard graphs is supported"
            )

    stub = types.ModuleType("onnx")
    stub.load_model_from_string = lambda data: _PassthroughModel()
    stub.__sess_export_stub__ = True
    # a real ModuleSpec keeps importlib.util.find_spec("onnx") working for
    # code that probes optional dependencies (torch._dynamo does)
    stub.__spec__ = importlib.machinery.ModuleSpec("onnx", loader=None)
    sys.modules["onnx"] = stub
    return True
