"""Saliency enhancement core: multi-scale sliding-window patch enumeration,
score-based pre-filtering, calibration onto the original frame, channel-
weighted indicator fusion, and optional smoothing.

The whole pipeline degenerates gracefully: a square input with one scale, no
pre-filtering and smoothing disabled reproduces the base extractor's
normalized map exactly.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .backend import ClassifierBackend, forward_scores
from .imgproc import (
    bilinear_resize,
    gaussian_blur,
    minmax_normalize,
    resize_shorter_side,
    scaled_dims,
)

__all__ = [
    "BASE_SIDE",
    "SCALE_INCREMENT",
    "SessConfig",
    "PatchSpec",
    "CalibratedStack",
    "SessRun",
    "scale_sizes",
    "window_origins",
    "enumerate_patches",
    "patch_specs_for_dims",
    "prefilter",
    "prefilter_indices",
    "calibrate",
    "apply_channel_weights",
    "fuse",
    "run_sess",
    "run_sess_detailed",
    "dump_patch_grid",
]

BASE_SIDE = 224
SCALE_INCREMENT = 64


@dataclass
class SessConfig:
    """All pipeline hyperparameters.

    Defaults follow the qualitative protocol: 12 scales, no pre-filtering,
    smoothing on. Quantitative runs typically use fewer scales, a high
    pre-filter ratio and smoothing disabled.
    """

    n_scales: int = 12
    window_w: int = BASE_SIDE
    window_h: int = BASE_SIDE
    step: int = BASE_SIDE
    prefilter_ratio: float = 0.0  # percent of lowest-scoring patches dropped
    theta: float = 0.0
    smoothing: bool = True
    smooth_kernel: int = 11
    smooth_sigma: float = 5.0
    target_class: int = 0
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.n_scales < 1:
            raise ValueError(f"n_scales must be >= 1, got {self.n_scales}")
        if self.window_w < 1 or self.window_h < 1:
            raise ValueError("window dimensions must be >= 1")
        if self.step < 1:
            raise ValueError(f"step must be >= 1, got {self.step}")
        if not 0.0 <= self.prefilter_ratio < 100.0:
            raise ValueError(
                f"prefilter_ratio is a percent in [0, 100), got {self.prefilter_ratio}"
            )

    def to_dict(self) -> dict:
        return {
            "n_scales": self.n_scales,
            "window_w": self.window_w,
            "window_h": self.window_h,
            "step": self.step,
            "prefilter_ratio": self.prefilter_ratio,
            "theta": self.theta,
            "smoothing": {
                "enabled": self.smoothing,
                "kernel": self.smooth_kernel,
                "sigma": self.smooth_sigma,
            },
            "target_class": self.target_class,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessConfig":
        data = dict(data)
        smoothing = data.pop("smoothing", None)
        if isinstance(smoothing, dict):
            data["smoothing"] = bool(smoothing.get("enabled", True))
            data["smooth_kernel"] = int(smoothing.get("kernel", 11))
            data["smooth_sigma"] = float(smoothing.get("sigma", 5.0))
        elif smoothing is not None:
            data["smoothing"] = bool(smoothing)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **kwargs) -> "SessConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class PatchSpec:
    """Provenance of one sliding-window patch in its scaled frame."""

    scale_index: int  # 1-based
    scaled_h: int
    scaled_w: int
    x: int
    y: int
    width: int = BASE_SIDE
    height: int = BASE_SIDE

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"negative patch origin ({self.x}, {self.y})")
        if self.x + self.width > self.scaled_w or self.y + self.height > self.scaled_h:
            raise ValueError(
                f"patch at ({self.x}, {self.y}) size {self.width}x{self.height} "
                f"exceeds scaled frame {self.scaled_w}x{self.scaled_h}"
            )


@dataclass
class CalibratedStack:
    """Per-patch saliency layers pasted onto full-size zero canvases, plus the
    class score of each contributing patch."""

    maps: np.ndarray  # (kept_count, H, W)
    weights: np.ndarray  # (kept_count,)

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.float32)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.maps.ndim != 3:
            raise ValueError(f"stack must be (layers, H, W), got {self.maps.shape}")
        if self.weights.shape != (self.maps.shape[0],):
            raise ValueError("one weight per layer required")

    @property
    def kept_count(self) -> int:
        return self.maps.shape[0]


@dataclass
class SessRun:
    """Full provenance of one pipeline run."""

    saliency: np.ndarray
    specs: list[PatchSpec]
    scores: np.ndarray
    kept_indices: np.ndarray
    kept_specs: list[PatchSpec]
    kept_scores: np.ndarray
    stack: CalibratedStack  # weighted layers, fusion input
    timings_ms: dict = field(default_factory=dict)


def scale_sizes(n: int) -> list[int]:
    """Shorter-side targets for n pyramid levels: 224, 288, 352, ..."""
    if n < 1:
        raise ValueError(f"need at least one scale, got n={n}")
    return [BASE_SIDE + SCALE_INCREMENT * (i - 1) for i in range(1, n + 1)]


def window_origins(length: int, win: int, step: int) -> list[int]:
    """Sliding-window start offsets along one axis.

    Regular starts every `step` pixels; a final start clamped to
    `length - win` is added when the regular grid does not reach the end,
    so boundary windows may overlap their neighbours.
    """
    if win < 1 or step < 1:
        raise ValueError("window and step must be >= 1")
    if length < win:
        raise ValueError(f"axis length {length} shorter than window {win}")
    origins = list(range(0, length - win + 1, step))
    if origins[-1] != length - win:
        origins.append(length - win)
    return origins


def patch_specs_for_dims(height: int, width: int, cfg: SessConfig) -> list[PatchSpec]:
    """Patch enumeration from image dimensions alone; scale ascending, then
    row-major within each scale."""
    specs = []
    for index, size in enumerate(scale_sizes(cfg.n_scales), start=1):
        sh, sw = scaled_dims(height, width, size)
        for y in window_origins(sh, cfg.window_h, cfg.step):
            for x in window_origins(sw, cfg.window_w, cfg.step):
                specs.append(
                    PatchSpec(
                        scale_index=index,
                        scaled_h=sh,
                        scaled_w=sw,
                        x=x,
                        y=y,
                        width=cfg.window_w,
                        height=cfg.window_h,
                    )
                )
    return specs


def enumerate_patches(image: np.ndarray, cfg: SessConfig) -> list[PatchSpec]:
    return patch_specs_for_dims(image.shape[0], image.shape[1], cfg)


def prefilter_indices(scores: np.ndarray, ratio: float) -> np.ndarray:
    """Indices (in enumeration order) of the top (100 - ratio)% scorers.

    keep_count = max(1, ceil(len * (100 - ratio) / 100)); ties resolve in
    favour of earlier enumeration. ratio 0 keeps everything.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a nonempty 1D sequence")
    if not 0.0 <= ratio < 100.0:
        raise ValueError(f"ratio is a percent in [0, 100), got {ratio}")
    keep = math.ceil(scores.size * (100.0 - ratio) / 100.0)
    keep = min(max(1, keep), scores.size)
    # stable argsort of the negated scores: descending, ties by position
    top = np.argsort(-scores, kind="stable")[:keep]
    return np.sort(top)


def prefilter(specs: list[PatchSpec], scores, ratio: float
              ) -> tuple[list[PatchSpec], np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    if len(specs) != scores.size:
        raise ValueError("one score per patch required")
    kept = prefilter_indices(scores, ratio)
    return [specs[i] for i in kept], scores[kept]


def calibrate(patch_map: np.ndarray, spec: PatchSpec,
              original_dims: tuple[int, int]) -> np.ndarray:
    """Paste a patch map onto a zero canvas of its scaled frame, then resize
    the canvas to the original image dimensions."""
    patch_map = np.asarray(patch_map, dtype=np.float32)
    if patch_map.shape != (spec.height, spec.width):
        raise ValueError(
            f"patch map shape {patch_map.shape} does not match spec "
            f"{spec.height}x{spec.width}"
        )
    if patch_map.min() < -1e-6 or patch_map.max() > 1.0 + 1e-6:
        raise ValueError("patch map must be normalized to [0, 1] before calibration")
    canvas = np.zeros((spec.scaled_h, spec.scaled_w), dtype=np.float32)
    canvas[spec.y : spec.y + spec.height, spec.x : spec.x + spec.width] = patch_map
    return bilinear_resize(canvas, original_dims[0], original_dims[1])


def apply_channel_weights(stack: CalibratedStack) -> CalibratedStack:
    """Multiply every layer by its patch's class score."""
    weights = stack.weights
    if not np.all(np.isfinite(weights)):
        raise ValueError("channel weights must be finite")
    if np.any(weights < 0):
        raise ValueError(
            "negative channel weight: scores are expected to be probabilities"
        )
    maps = stack.maps * weights[:, None, None].astype(np.float32)
    return CalibratedStack(maps=maps, weights=weights.copy())


def fuse(stack: CalibratedStack, theta: float = 0.0) -> np.ndarray:
    """Per-pixel average over layers whose value exceeds theta, then Min-Max
    normalized. Pixels supported by no layer fuse to 0."""
    if stack.kept_count < 1:
        raise ValueError("cannot fuse an empty stack")
    support = stack.maps > theta
    # accumulate in float64: layer values are float32 but the averaged map
    # must agree with an exact per-pixel reduction to 1e-6
    total = np.where(support, stack.maps, 0.0).sum(axis=0, dtype=np.float64)
    count = support.sum(axis=0)
    fused = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    return minmax_normalize(fused)


def run_sess_detailed(image: np.ndarray, backend: ClassifierBackend, base,
                      cfg: SessConfig, num_workers: int = 1) -> SessRun:
    """Execute the full enhancement pipeline, keeping per-stage provenance.

    Stages: multi-scale resize, patch enumeration, batched scoring,
    pre-filtering, per-patch base saliency + Min-Max, calibration, channel
    weighting, indicator fusion, optional Gaussian smoothing. Per-patch
    extraction parallelizes across `num_workers` threads; the reduction is
    ordered, so output is invariant to scheduling.
    """
    if cfg.window_w != backend.input_size or cfg.window_h != backend.input_size:
        raise ValueError(
            f"window {cfg.window_w}x{cfg.window_h} must equal backend input size "
            f"{backend.input_size}"
        )
    timings: dict = {}
    original_dims = (image.shape[0], image.shape[1])

    start = time.perf_counter()
    scaled_images = {
        index: resize_shorter_side(image, size)
        for index, size in enumerate(scale_sizes(cfg.n_scales), start=1)
    }
    specs = enumerate_patches(image, cfg)
    patches = np.stack(
        [
            scaled_images[s.scale_index][s.y : s.y + s.height, s.x : s.x + s.width]
            for s in specs
        ]
    )
    timings["pyramid_ms"] = 1000 * (time.perf_counter() - start)

    start = time.perf_counter()
    scores = forward_scores(backend, patches, cfg.batch_size)[:, cfg.target_class]
    timings["scoring_ms"] = 1000 * (time.perf_counter() - start)

    kept = prefilter_indices(scores, cfg.prefilter_ratio)
    kept_specs = [specs[i] for i in kept]
    kept_scores = scores[kept]

    start = time.perf_counter()

    def extract_layer(position: int) -> np.ndarray:
        patch_index = int(kept[position])
        raw = base.extract(patches[patch_index], cfg.target_class, backend,
                           patch_index=patch_index)
        return calibrate(minmax_normalize(raw), kept_specs[position], original_dims)

    if num_workers > 1:
        with ThreadPoolExecutor(max_workers=num_workers) as pool:
            layers = list(pool.map(extract_layer, range(len(kept))))
    else:
        layers = [extract_layer(i) for i in range(len(kept))]
    timings["extraction_ms"] = 1000 * (time.perf_counter() - start)

    start = time.perf_counter()
    stack = apply_channel_weights(
        CalibratedStack(maps=np.stack(layers), weights=kept_scores)
    )
    saliency = fuse(stack, cfg.theta)
    if cfg.smoothing:
        saliency = gaussian_blur(saliency, cfg.smooth_kernel, cfg.smooth_sigma)
    timings["fusion_ms"] = 1000 * (time.perf_counter() - start)

    return SessRun(
        saliency=saliency,
        specs=specs,
        scores=scores,
        kept_indices=kept,
        kept_specs=kept_specs,
        kept_scores=kept_scores,
        stack=stack,
        timings_ms=timings,
    )


def run_sess(image: np.ndarray, backend: ClassifierBackend, base,
             cfg: SessConfig, num_workers: int = 1) -> np.ndarray:
    """Enhanced saliency map at the original image dimensions, in [0, 1]."""
    return run_sess_detailed(image, backend, base, cfg, num_workers).saliency


def dump_patch_grid(stack: CalibratedStack, specs: list[PatchSpec],
                    tile_width: int = 160, gutter: int = 4) -> np.ndarray:
    """Tiled montage of the stack's layers, one row per scale, each tile
    carrying a red outline of its source window mapped to the original frame."""
    if stack.kept_count < 1:
        raise ValueError("cannot render an empty stack")
    if len(specs) != stack.kept_count:
        raise ValueError("one spec per layer required")

    orig_h, orig_w = stack.maps.shape[1:]
    tile_h = max(1, int(round(orig_h * tile_width / orig_w)))
    peak = float(stack.maps.max())
    scale_rows = sorted({s.scale_index for s in specs})
    row_of = {scale: row for row, scale in enumerate(scale_rows)}
    columns = max(
        sum(1 for s in specs if s.scale_index == scale) for scale in scale_rows
    )

    height = gutter + len(scale_rows) * (tile_h + gutter)
    width = gutter + columns * (tile_width + gutter)
    canvas = np.full((height, width, 3), 0.12, dtype=np.float32)

    next_col = {scale: 0 for scale in scale_rows}
    for layer, spec in zip(stack.maps, specs):
        shown = layer / peak if peak > 0 else layer
        tile = np.repeat(
            bilinear_resize(shown, tile_h, tile_width)[:, :, None], 3, axis=2
        )
        # window footprint mapped: scaled frame -> original frame -> tile
        fx = tile_width / spec.scaled_w
        fy = tile_h / spec.scaled_h
        x0, x1 = int(round(spec.x * fx)), int(round((spec.x + spec.width) * fx))
        y0, y1 = int(round(spec.y * fy)), int(round((spec.y + spec.height) * fy))
        x1, y1 = min(x1, tile_width - 1), min(y1, tile_h - 1)
        red = np.array([1.0, 0.15, 0.15], dtype=np.float32)
        tile[y0 : y1 + 1, x0] = red
        tile[y0 : y1 + 1, x1] = red
        tile[y0, x0 : x1 + 1] = red
        tile[y1, x0 : x1 + 1] = red

        row = row_of[spec.scale_index]
        col = next_col[spec.scale_index]
        next_col[spec.scale_index] += 1
        top = gutter + row * (tile_h + gutter)
        left = gutter + col * (tile_width + gutter)
        canvas[top : top + tile_h, left : left + tile_width] = tile
    return canvas
