"""Pluggable classifier backends producing per-class scores for image batches.

A backend wraps one model behind a batched forward pass. Two implementations
are provided: `OnnxBackend` runs an ONNX file with its JSON sidecar
(preprocessing constants, logits flag, labels), and `QuadrantMock` is a
deterministic four-class model whose logits are quadrant mean intensities,
used as an analytic oracle in tests.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from .onnx_graph import OnnxDecodeError, OnnxModel, UnsupportedOpError

__all__ = [
    "ClassifierBackend",
    "QuadrantMock",
    "OnnxBackend",
    "UnsupportedModelError",
    "ModelMetadataError",
    "load_model",
    "forward_scores",
    "make_quadrant_mock",
    "softmax",
]

DEFAULT_MAX_BATCH = 32


class UnsupportedModelError(ValueError):
    """Model graph violates the single-image-input classifier contract."""


class ModelMetadataError(ValueError):
    """Sidecar metadata is missing, malformed, or inconsistent with the graph."""


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


class ClassifierBackend(ABC):
    """Batched forward passes mapping image patches to per-class scores.

    Scores are post-softmax probabilities by default; rows sum to one.
    Instances are read-only after construction and shareable across workers.
    """

    input_size: int
    num_classes: int
    labels: list[str]
    max_batch: int = DEFAULT_MAX_BATCH

    @abstractmethod
    def forward(self, batch: np.ndarray) -> np.ndarray:
        """Score a (B, H, W, 3) float batch; returns (B, num_classes)."""


class QuadrantMock(ClassifierBackend):
    """Deterministic test model: logit of class q is the mean intensity of
    quadrant q (TL, TR, BL, BR), followed by softmax.

    An all-black patch scores uniform 1/4 per class, and brightening a
    quadrant strictly raises its own class probability, which makes
    end-to-end localization analytically checkable.
    """

    def __init__(self, input_size: int = 224):
        self.input_size = input_size
        self.num_classes = 4
        self.labels = ["quadrant-tl", "quadrant-tr", "quadrant-bl", "quadrant-br"]

    def forward(self, batch: np.ndarray) -> np.ndarray:
        half = self.input_size // 2
        top, bottom = batch[:, :half], batch[:, half:]
        logits = np.stack(
            [
                top[:, :, :half].mean(axis=(1, 2, 3)),
                top[:, :, half:].mean(axis=(1, 2, 3)),
                bottom[:, :, :half].mean(axis=(1, 2, 3)),
                bottom[:, :, half:].mean(axis=(1, 2, 3)),
            ],
            axis=1,
        )
        return softmax(logits.astype(np.float64))


def make_quadrant_mock(num_classes: int = 4, input_size: int = 224) -> QuadrantMock:
    if num_classes != 4:
        raise ValueError("the quadrant mock defines exactly 4 classes")
    return QuadrantMock(input_size=input_size)


_META_REQUIRED = {"input_size", "mean", "std", "emits_logits", "labels"}


def _load_meta(meta) -> dict:
    if isinstance(meta, (str, Path)):
        path = Path(meta)
        if not path.exists():
            raise FileNotFoundError(f"sidecar metadata not found: {path}")
        try:
            meta = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ModelMetadataError(f"sidecar {path} is not valid JSON: {exc}") from exc
    if not isinstance(meta, dict):
        raise ModelMetadataError(f"metadata must be a JSON object, got {type(meta)}")
    missing = _META_REQUIRED - meta.keys()
    if missing:
        raise ModelMetadataError(f"sidecar missing fields: {sorted(missing)}")
    for key in ("mean", "std"):
        if len(meta[key]) != 3:
            raise ModelMetadataError(f"{key} must have 3 per-channel entries")
    return meta


class OnnxBackend(ClassifierBackend):
    """Classifier backed by an ONNX file with one (B, 3, H, W) image input.

    Preprocessing (per-channel mean/std) comes from the sidecar; softmax is
    applied when the graph emits logits unless `softmax_scores` is disabled.
    """

    def __init__(self, model: OnnxModel, meta: dict, softmax_scores: bool = True,
                 max_batch: int = DEFAULT_MAX_BATCH):
        self.model = model
        self.meta = meta
        self.softmax_scores = softmax_scores
        self.max_batch = max_batch

        if len(model.inputs) != 1:
            raise UnsupportedModelError(
                f"expected exactly one graph input, found {len(model.inputs)}"
            )
        shape = model.inputs[0].shape
        if len(shape) != 4:
            raise UnsupportedModelError(f"image input must be rank 4, got {shape}")
        _, channels, height, width = shape
        if channels != 3:
            raise UnsupportedModelError(f"expected 3 input channels, got {channels}")
        if not isinstance(height, int) or height != width:
            raise UnsupportedModelError(f"expected square static input, got {shape}")
        self.input_size = height
        if int(meta["input_size"]) != height:
            raise ModelMetadataError(
                f"sidecar input_size {meta['input_size']} != graph input {height}"
            )

        if len(model.outputs) != 1:
            raise UnsupportedModelError(
                f"expected exactly one graph output, found {len(model.outputs)}"
            )
        out_shape = model.outputs[0].shape
        if len(out_shape) != 2:
            raise UnsupportedModelError(f"score output must be rank 2, got {out_shape}")
        if isinstance(out_shape[1], int):
            self.num_classes = out_shape[1]
        else:
            probe = np.zeros((1, 3, height, width), dtype=np.float32)
            self.num_classes = int(self.model.run({model.inputs[0].name: probe})[0].shape[1])
        self.labels = list(meta["labels"])
        if self.labels and len(self.labels) != self.num_classes:
            raise ModelMetadataError(
                f"{len(self.labels)} labels for {self.num_classes} classes"
            )
        self._mean = np.asarray(meta["mean"], dtype=np.float32).reshape(1, 3, 1, 1)
        self._std = np.asarray(meta["std"], dtype=np.float32).reshape(1, 3, 1, 1)

    def forward(self, batch: np.ndarray) -> np.ndarray:
        nchw = np.ascontiguousarray(batch.transpose(0, 3, 1, 2), dtype=np.float32)
        nchw = (nchw - self._mean) / self._std
        scores = self.model.run({self.model.inputs[0].name: nchw})[0]
        scores = np.asarray(scores, dtype=np.float64)
        if self.meta["emits_logits"] and self.softmax_scores:
            scores = softmax(scores)
        return scores


def load_model(path, meta, softmax_scores: bool = True,
               max_batch: int = DEFAULT_MAX_BATCH) -> OnnxBackend:
    """Load an ONNX classifier plus its sidecar into a ready backend.

    `meta` is the sidecar as a dict or a path to its JSON file. Raises
    FileNotFoundError for missing files, OnnxDecodeError for unreadable
    model bytes, UnsupportedModelError for contract violations, and
    ModelMetadataError for bad sidecars.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    model = OnnxModel.from_file(path)
    return OnnxBackend(model, _load_meta(meta), softmax_scores=softmax_scores,
                       max_batch=max_batch)


def forward_scores(backend: ClassifierBackend, batch, batch_size: int | None = None
                   ) -> np.ndarray:
    """Score a list (or array) of patches, chunking requests to the backend.

    Every patch must be exactly input_size x input_size x 3; the result row i
    is the score vector of patch i.
    """
    patches = np.asarray(batch, dtype=np.float32)
    if patches.ndim == 3:
        patches = patches[None]
    if patches.shape[0] == 0:
        raise ValueError("empty batch")
    size = backend.input_size
    if patches.shape[1:] != (size, size, 3):
        raise ValueError(
            f"patches must be {size}x{size}x3, got {patches.shape[1:]}"
        )
    chunk = batch_size or backend.max_batch
    rows = [
        backend.forward(patches[start : start + chunk])
        for start in range(0, patches.shape[0], chunk)
    ]
    return np.concatenate(rows, axis=0)


# re-exported so callers can catch decode and kernel errors from one module
__all__ += ["OnnxDecodeError", "UnsupportedOpError"]
