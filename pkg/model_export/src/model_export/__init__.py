"""Export torchvision classifiers to ONNX with a JSON preprocessing sidecar."""

__version__ = "0.1.0"

from .export import ExportFailed, ExportSpec, export_model

__all__ = ["ExportFailed", "ExportSpec", "export_model", "__version__"]
