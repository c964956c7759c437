"""Quantitative saliency evaluation.

Insertion/deletion curves score the target class while pixels are restored
to (or removed from) the image in descending saliency order; the area under
each curve summarizes it, and overall = AUC(insertion) - AUC(deletion).
The Pointing Game checks whether the saliency argmax falls inside a
ground-truth box, aggregated per class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import ClassifierBackend, forward_scores
from .imgproc import bilinear_resize, gaussian_blur

__all__ = [
    "CurveResult",
    "PointingResult",
    "deletion_curve",
    "insertion_curve",
    "overall_score",
    "pointing_game",
    "aggregate_pointing",
    "load_annotations",
]

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

DEFAULT_STEP_FRACTION = 0.036
INSERTION_BLUR_KERNEL = 51
INSERTION_BLUR_SIGMA = 24.0


@dataclass
class CurveResult:
    kind: str  # "insertion" | "deletion"
    fractions: np.ndarray  # pixel-fraction checkpoints, 0 .. 1
    scores: np.ndarray  # class probability at each checkpoint
    auc: float
    meta: dict = field(default_factory=dict)


@dataclass
class PointingResult:
    per_class: dict  # class -> {"hits": int, "misses": int, "acc": float}
    mean_acc: float


def _prepare(image: np.ndarray, sal: np.ndarray, backend: ClassifierBackend
             ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Resize image and saliency to the backend frame; return them plus the
    removal/restoration order (descending saliency, ties row-major)."""
    if image.shape[:2] != sal.shape[:2]:
        raise ValueError(
            f"saliency {sal.shape[:2]} does not match image {image.shape[:2]}"
        )
    size = backend.input_size
    image = bilinear_resize(image, size, size)
    sal = bilinear_resize(sal, size, size)
    order = np.argsort(-sal.reshape(-1), kind="stable")
    return image, sal, order


def _step_schedule(total: int, step_frac: float) -> tuple[int, int]:
    if not 0.0 < step_frac <= 1.0:
        raise ValueError(f"step fraction must be in (0, 1], got {step_frac}")
    per_step = max(1, int(round(total * step_frac)))
    steps = -(-total // per_step)  # ceil
    return per_step, steps


def _score_states(states: list[np.ndarray], backend: ClassifierBackend,
                  target_class: int) -> np.ndarray:
    return forward_scores(backend, np.stack(states))[:, target_class]


def deletion_curve(image: np.ndarray, sal: np.ndarray,
                   backend: ClassifierBackend, target_class: int,
                   step_frac: float = DEFAULT_STEP_FRACTION,
                   fill: float = 0.0) -> CurveResult:
    """Gradually zero out the most salient pixels, scoring after every step.

    Sharp early drops indicate saliency concentrated on true evidence.
    """
    image, _, order = _prepare(image, sal, backend)
    total = image.shape[0] * image.shape[1]
    per_step, steps = _step_schedule(total, step_frac)

    flat = image.reshape(total, 3).copy()
    states = [flat.reshape(image.shape).copy()]
    for k in range(steps):
        flat[order[k * per_step : (k + 1) * per_step]] = fill
        states.append(flat.reshape(image.shape).copy())
    scores = _score_states(states, backend, target_class)
    fractions = np.minimum(np.arange(steps + 1) * per_step, total) / total
    return CurveResult(
        kind="deletion",
        fractions=fractions,
        scores=scores,
        auc=float(_trapezoid(scores, fractions)),
        meta={"step_frac": step_frac, "pixels_per_step": per_step, "fill": fill},
    )


def insertion_curve(image: np.ndarray, sal: np.ndarray,
                    backend: ClassifierBackend, target_class: int,
                    step_frac: float = DEFAULT_STEP_FRACTION,
                    blur_kernel: int = INSERTION_BLUR_KERNEL,
                    blur_sigma: float = INSERTION_BLUR_SIGMA) -> CurveResult:
    """Gradually restore the most salient pixels into a heavily blurred copy.

    After the last step the working image equals the original exactly.
    """
    image, _, order = _prepare(image, sal, backend)
    total = image.shape[0] * image.shape[1]
    per_step, steps = _step_schedule(total, step_frac)

    original = image.reshape(total, 3)
    flat = gaussian_blur(image, blur_kernel, blur_sigma).reshape(total, 3).copy()
    states = [flat.reshape(image.shape).copy()]
    for k in range(steps):
        chunk = order[k * per_step : (k + 1) * per_step]
        flat[chunk] = original[chunk]
        states.append(flat.reshape(image.shape).copy())
    scores = _score_states(states, backend, target_class)
    fractions = np.minimum(np.arange(steps + 1) * per_step, total) / total
    return CurveResult(
        kind="insertion",
        fractions=fractions,
        scores=scores,
        auc=float(_trapezoid(scores, fractions)),
        meta={
            "step_frac": step_frac,
            "pixels_per_step": per_step,
            "blur_kernel": blur_kernel,
            "blur_sigma": blur_sigma,
        },
    )


def overall_score(insertion: CurveResult, deletion: CurveResult) -> float:
    """AUC(insertion) - AUC(deletion); positive means informative saliency."""
    if insertion.kind != "insertion" or deletion.kind != "deletion":
        raise ValueError(
            f"expected (insertion, deletion) results, got "
            f"({insertion.kind}, {deletion.kind})"
        )
    return insertion.auc - deletion.auc


def pointing_game(sal: np.ndarray, boxes, tolerance: int = 0) -> bool:
    """True when the saliency argmax lies inside any ground-truth box.

    Boxes are [x0, y0, x1, y1] with inclusive edges, in the saliency map's
    coordinate frame. Ties at the maximum resolve to the first pixel in
    row-major order. `tolerance` inflates boxes by that many pixels
    (default 0: strict containment).
    """
    if len(boxes) == 0:
        raise ValueError("at least one ground-truth box is required")
    sal = np.asarray(sal)
    index = int(np.argmax(sal))  # first maximum in row-major order
    y, x = divmod(index, sal.shape[1])
    for x0, y0, x1, y1 in boxes:
        if (x0 - tolerance <= x <= x1 + tolerance
                and y0 - tolerance <= y <= y1 + tolerance):
            return True
    return False


def aggregate_pointing(results) -> PointingResult:
    """Per-class accuracy then unweighted mean over annotated classes.

    `results` is an iterable of (class_id, hit: bool).
    """
    hits: dict = {}
    misses: dict = {}
    for class_id, hit in results:
        hits.setdefault(class_id, 0)
        misses.setdefault(class_id, 0)
        if hit:
            hits[class_id] += 1
        else:
            misses[class_id] += 1
    per_class = {}
    for class_id in sorted(hits):
        h, m = hits[class_id], misses[class_id]
        per_class[class_id] = {"hits": h, "misses": m, "acc": h / (h + m)}
    accs = [stats["acc"] for stats in per_class.values()]
    return PointingResult(
        per_class=per_class,
        mean_acc=float(np.mean(accs)) if accs else 0.0,
    )


def load_annotations(path) -> list[dict]:
    """Read a JSON-lines dataset manifest.

    Each record: {"image": path, "objects": [{"class": id,
    "bbox": [x0, y0, x1, y1]}, ...]} plus optional fields such as "class"
    (eval target) and "difficult" (bool subset tag).
    """
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "image" not in record:
                raise ValueError(f"{path}:{lineno}: record missing 'image'")
            record["image"] = str(Path(record["image"]))
            records.append(record)
    return records
