"""One-shot export of torchvision classifiers to ONNX + JSON sidecar.

The sidecar carries everything the inference side needs: input size,
per-channel mean/std, a logits flag, and the label table. When pretrained
weights cannot be downloaded (offline environments) the export falls back to
a seeded random initialization and records that in the sidecar, which keeps
cross-runtime parity checks meaningful.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .onnx_compat import ensure_onnx_importable

SIDECAR_FIELDS = ("input_size", "mean", "std", "emits_logits", "labels")


class ExportFailed(RuntimeError):
    """Architecture lookup or graph export failed."""


@dataclass
class ExportSpec:
    architecture: str
    out_dir: Path
    opset: int = 17
    verify_image: Path | None = None
    pretrained: bool = True
    fallback_seed: int = 0
    model_filename: str = "model.onnx"
    meta_filename: str = "model.json"
    extra_meta: dict = field(default_factory=dict)


def _zoo_entry(architecture: str):
    import torchvision.models as zoo

    try:
        weights_enum = zoo.get_model_weights(architecture)
    except ValueError as exc:
        raise ExportFailed(f"unknown architecture {architecture!r}") from exc
    return zoo, weights_enum.DEFAULT


def _build_model(spec: ExportSpec):
    """Instantiate the network, preferring pretrained weights but falling
    back to seeded random init when the download is unavailable."""
    import torch

    zoo, default_weights = _zoo_entry(spec.architecture)
    pretrained = False
    if spec.pretrained:
        try:
            model = zoo.get_model(spec.architecture, weights=default_weights)
            pretrained = True
        except Exception as exc:
            warnings.warn(
                f"pretrained weights unavailable ({exc}); falling back to "
                f"random initialization with seed {spec.fallback_seed}"
            )
    if not pretrained:
        torch.manual_seed(spec.fallback_seed)
        model = zoo.get_model(spec.architecture, weights=None)
    return model.eval(), default_weights, pretrained


def _preprocessing(default_weights) -> tuple[int, list[float], list[float]]:
    transforms = default_weights.transforms()
    crop = transforms.crop_size
    size = crop[0] if isinstance(crop, (list, tuple)) else int(crop)
    return size, [float(v) for v in transforms.mean], [float(v) for v in transforms.std]


def _verify_top1(model, image_path: Path, input_size: int,
                 mean: list[float], std: list[float]) -> dict:
    import numpy as np
    import torch
    from PIL import Image

    with Image.open(image_path) as im:
        rgb = im.convert("RGB").resize((input_size, input_size),
                                       Image.Resampling.BILINEAR)
    pixels = np.asarray(rgb, dtype="float32") / 255.0
    tensor = torch.from_numpy(pixels.transpose(2, 0, 1))[None]
    tensor = (tensor - torch.tensor(mean).view(1, 3, 1, 1)) / torch.tensor(
        std).view(1, 3, 1, 1)
    with torch.no_grad():
        logits = model(tensor)
    top1 = int(logits.argmax(dim=1).item())
    return {"image": str(image_path), "top1": top1}


def export_model(spec: ExportSpec) -> dict:
    """Export one architecture; returns {"model": path, "meta": path}."""
    import torch

    ensure_onnx_importable()
    model, default_weights, pretrained = _build_model(spec)
    input_size, mean, std = _preprocessing(default_weights)
    labels = list(default_weights.meta.get("categories") or [])

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / spec.model_filename
    meta_path = out_dir / spec.meta_filename

    example = torch.zeros(1, 3, input_size, input_size)
    try:
        with torch.no_grad():
            torch.onnx.export(
                model,
                example,
                str(model_path),
                input_names=["input"],
                output_names=["logits"],
                dynamic_axes={"input": {0: "batch"}, "logits": {0: "batch"}},
                opset_version=spec.opset,
                dynamo=False,
            )
    except Exception as exc:
        raise ExportFailed(
            f"ONNX export of {spec.architecture} failed: {exc}"
        ) from exc

    meta = {
        "input_size": input_size,
        "mean": mean,
        "std": std,
        "emits_logits": True,  # forward-only classification graph
        "labels": labels,
        "architecture": spec.architecture,
        "pretrained": pretrained,
        "opset": spec.opset,
        **spec.extra_meta,
    }
    if spec.verify_image is not None:
        meta["verification"] = _verify_top1(model, Path(spec.verify_image),
                                            input_size, mean, std)
    meta_path.write_text(json.dumps(meta, indent=2))
    return {"model": model_path, "meta": meta_path}
