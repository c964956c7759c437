"""Base saliency extractors operating on single fixed-size patches.

Each extractor maps (patch, target class, backend) to a raw single-channel
map of the patch's size; normalization happens downstream in the pipeline.
Extractors are stateless given their config, so patches may be processed
concurrently. The external adapter shells out to an arbitrary third-party
method through a file-based request/response protocol.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backend import ClassifierBackend, forward_scores
from .imgproc import bilinear_resize, save_png
from .pipeline import window_origins

__all__ = [
    "BaseSaliencyMethod",
    "OcclusionConfig",
    "OcclusionMethod",
    "occlusion_saliency",
    "RiseConfig",
    "RiseMethod",
    "rise_saliency",
    "ExternalMethod",
    "external_saliency",
    "ExternalMethodFailed",
    "ShapeMismatchError",
    "NonFiniteOutputError",
]


class ExternalMethodFailed(RuntimeError):
    """Adapter process exited nonzero or produced unreadable output."""


class ShapeMismatchError(ValueError):
    """Adapter raster does not have the expected dimensions."""


class NonFiniteOutputError(ValueError):
    """Adapter raster contains NaN or infinite values."""


class BaseSaliencyMethod(ABC):
    """One saliency extractor; `extract` returns a (size, size) float map."""

    name: str = "base"
    query_budget: int = 0  # forward passes per patch, bookkeeping only

    @abstractmethod
    def extract(self, patch: np.ndarray, target_class: int,
                backend: ClassifierBackend, patch_index: int = 0) -> np.ndarray:
        ...


@dataclass
class OcclusionConfig:
    occluder: int = 32
    stride: int = 16
    fill: float = 0.0

    def __post_init__(self):
        if self.occluder < 1:
            raise ValueError(f"occluder must be >= 1, got {self.occluder}")
        if not 1 <= self.stride <= self.occluder:
            raise ValueError(
                f"stride must be in [1, occluder], got {self.stride}"
            )


def occlusion_saliency(patch: np.ndarray, target_class: int,
                       backend: ClassifierBackend,
                       cfg: OcclusionConfig | None = None) -> np.ndarray:
    """Score drop caused by sliding an occluding square over the patch.

    For every boundary-clamped occluder placement the drop
    max(0, baseline - occluded score) is spread over the covered pixels;
    overlapping placements average by per-pixel coverage count.
    """
    cfg = cfg or OcclusionConfig()
    size = backend.input_size
    if patch.shape[:2] != (size, size):
        raise ValueError(f"patch must be {size}x{size}, got {patch.shape[:2]}")
    if cfg.occluder > size:
        raise ValueError(f"occluder {cfg.occluder} exceeds patch size {size}")

    baseline = forward_scores(backend, patch[None])[0, target_class]
    origins = window_origins(size, cfg.occluder, cfg.stride)
    placements = [(y, x) for y in origins for x in origins]

    heat = np.zeros((size, size), dtype=np.float64)
    coverage = np.zeros((size, size), dtype=np.float64)
    chunk = backend.max_batch
    for start in range(0, len(placements), chunk):
        group = placements[start : start + chunk]
        occluded = np.repeat(patch[None], len(group), axis=0)
        for k, (y, x) in enumerate(group):
            occluded[k, y : y + cfg.occluder, x : x + cfg.occluder] = cfg.fill
        scores = forward_scores(backend, occluded)[:, target_class]
        for (y, x), score in zip(group, scores):
            drop = max(0.0, float(baseline - score))
            heat[y : y + cfg.occluder, x : x + cfg.occluder] += drop
            coverage[y : y + cfg.occluder, x : x + cfg.occluder] += 1.0
    return (heat / coverage).astype(np.float32)


class OcclusionMethod(BaseSaliencyMethod):
    name = "occlusion"

    def __init__(self, cfg: OcclusionConfig | None = None):
        self.cfg = cfg or OcclusionConfig()
        per_axis = len(window_origins(224, self.cfg.occluder, self.cfg.stride))
        self.query_budget = per_axis * per_axis + 1

    def extract(self, patch, target_class, backend, patch_index: int = 0):
        return occlusion_saliency(patch, target_class, backend, self.cfg)


@dataclass
class RiseConfig:
    num_masks: int = 500
    grid: int = 7
    keep_prob: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_masks < 1:
            raise ValueError(f"num_masks must be >= 1, got {self.num_masks}")
        if not 1 <= self.grid <= 224:
            raise ValueError(f"grid must be in [1, 224], got {self.grid}")
        if not 0.0 < self.keep_prob < 1.0:
            raise ValueError(f"keep_prob must be in (0, 1), got {self.keep_prob}")


def _rise_masks(rng: np.random.Generator, count: int, grid: int, keep_prob: float,
                size: int) -> np.ndarray:
    """Random soft masks: Bernoulli grids, bilinearly upsampled with a random
    sub-cell shift, cropped to (size, size)."""
    cell = math.ceil(size / grid)
    up = (grid + 1) * cell
    masks = np.empty((count, size, size), dtype=np.float32)
    for k in range(count):
        bits = (rng.random((grid, grid)) < keep_prob).astype(np.float32)
        field = bilinear_resize(bits, up, up)
        dy = int(rng.integers(0, cell))
        dx = int(rng.integers(0, cell))
        masks[k] = field[dy : dy + size, dx : dx + size]
    return masks


def rise_saliency(patch: np.ndarray, target_class: int,
                  backend: ClassifierBackend, cfg: RiseConfig | None = None,
                  seed: int | None = None) -> np.ndarray:
    """Randomized-mask saliency: expected class score under multiplicative
    random masking, normalized by N * keep_prob. Deterministic given the seed.
    """
    cfg = cfg or RiseConfig()
    size = backend.input_size
    if patch.shape[:2] != (size, size):
        raise ValueError(f"patch must be {size}x{size}, got {patch.shape[:2]}")
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)

    total = np.zeros((size, size), dtype=np.float64)
    chunk = backend.max_batch
    remaining = cfg.num_masks
    while remaining > 0:
        count = min(chunk, remaining)
        masks = _rise_masks(rng, count, cfg.grid, cfg.keep_prob, size)
        masked = patch[None] * masks[:, :, :, None]
        scores = forward_scores(backend, masked)[:, target_class]
        total += np.tensordot(scores, masks.astype(np.float64), axes=1)
        remaining -= count
    return (total / (cfg.num_masks * cfg.keep_prob)).astype(np.float32)


class RiseMethod(BaseSaliencyMethod):
    name = "rise"

    def __init__(self, cfg: RiseConfig | None = None):
        self.cfg = cfg or RiseConfig()
        self.query_budget = self.cfg.num_masks

    def extract(self, patch, target_class, backend, patch_index: int = 0):
        # per-patch seed keeps parallel execution deterministic
        return rise_saliency(patch, target_class, backend, self.cfg,
                             seed=self.cfg.rng_seed + patch_index)


def external_saliency(patch: np.ndarray, target_class: int, adapter,
                      expected_size: int = 224, timeout: float = 300.0
                      ) -> np.ndarray:
    """Delegate one patch to an external adapter process.

    The adapter is invoked as `argv + [request_dir]` where request_dir holds
    patch.png and request.json ({"class_id": int}); it must write
    saliency.f32 (size*size float32, little-endian, row-major) and exit 0.
    """
    argv = shlex.split(adapter) if isinstance(adapter, str) else list(adapter)
    with tempfile.TemporaryDirectory(prefix="sess-adapter-") as workdir:
        work = Path(workdir)
        save_png(work / "patch.png", patch)
        (work / "request.json").write_text(json.dumps({"class_id": int(target_class)}))
        try:
            proc = subprocess.run(
                argv + [str(work)], capture_output=True, timeout=timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalMethodFailed(f"adapter {argv} failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise ExternalMethodFailed(
                f"adapter exited {proc.returncode}; stderr: "
                f"{proc.stderr.decode(errors='replace')[-500:]}"
            )
        raster = work / "saliency.f32"
        if not raster.exists():
            raise ExternalMethodFailed(f"adapter wrote no saliency.f32 in {work}")
        data = np.fromfile(raster, dtype="<f4")
    expected = expected_size * expected_size
    if data.size != expected:
        raise ShapeMismatchError(
            f"adapter raster holds {data.size} values, expected "
            f"{expected_size}x{expected_size}"
        )
    result = data.reshape(expected_size, expected_size)
    if not np.all(np.isfinite(result)):
        raise NonFiniteOutputError("adapter raster contains non-finite values")
    return result


class ExternalMethod(BaseSaliencyMethod):
    name = "external"
    query_budget = 1

    def __init__(self, adapter):
        self.adapter = adapter

    def extract(self, patch, target_class, backend, patch_index: int = 0):
        return external_saliency(patch, target_class, self.adapter,
                                 expected_size=backend.input_size)
