"""Command-line front door.

Subcommands: `saliency` (generate + render one map), `eval-insdel`
(insertion/deletion benchmark over a dataset manifest), `eval-pointing`
(Pointing Game over box annotations), `sweep` (ablation over scales or the
pre-filter ratio), `inspect-patches` (per-patch montage + score table).

Every run writes a manifest.json snapshot (config, model hash, seed, patch
scores, stage timings, output paths) sufficient to re-run identically.
Exit codes: 0 success, 2 input error, 3 model error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .backend import (
    ClassifierBackend,
    ModelMetadataError,
    OnnxDecodeError,
    UnsupportedModelError,
    UnsupportedOpError,
    load_model,
    make_quadrant_mock,
)
from .imgproc import load_image, save_png, write_f32
from .metrics import (
    aggregate_pointing,
    deletion_curve,
    insertion_curve,
    load_annotations,
    overall_score,
    pointing_game,
)
from .pipeline import SessConfig, dump_patch_grid, run_sess_detailed
from .saliency import ExternalMethod, OcclusionMethod, RiseConfig, RiseMethod

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MODEL = 3
EXIT_INTERNAL = 4

MOCK_MODEL = "mock:quadrant"

_INPUT_ERRORS = (FileNotFoundError, ValueError, KeyError)
_MODEL_ERRORS = (OnnxDecodeError, UnsupportedModelError, ModelMetadataError,
                 UnsupportedOpError)


class CliInputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=None,
                   help=f"ONNX model path, or '{MOCK_MODEL}' for the "
                        f"deterministic 4-class test model (default: "
                        f"{MOCK_MODEL}, or the model recorded in --config "
                        "when that file is a run manifest)")
    p.add_argument("--meta", default=None,
                   help="JSON sidecar path (defaults to MODEL with .json suffix)")
    p.add_argument("--batch", type=int, default=32, help="max inference batch size")


def _add_pipeline_flags(p: argparse.ArgumentParser, smooth_default: bool) -> None:
    p.add_argument("--config", default=None,
                   help="JSON/TOML config file mirroring the pipeline config; "
                        "flags override file values (a manifest.json also works)")
    p.add_argument("--class", dest="target_class", type=int, default=None,
                   help="target class index (default 0)")
    p.add_argument("--scales", type=int, default=None, help="number of scales")
    p.add_argument("--window", type=int, default=None, help="window side in pixels")
    p.add_argument("--step", type=int, default=None, help="sliding-window step")
    p.add_argument("--prefilter", type=float, default=None,
                   help="percent of lowest-scoring patches to drop, [0, 100)")
    p.add_argument("--theta", type=float, default=None,
                   help="fusion support threshold (values > theta contribute)")
    smooth = p.add_mutually_exclusive_group()
    smooth.add_argument("--smooth", dest="smoothing", action="store_true",
                        default=None)
    smooth.add_argument("--no-smooth", dest="smoothing", action="store_false")
    p.set_defaults(smooth_default=smooth_default)
    p.add_argument("--seed", type=int, default=None, help="global RNG seed")
    p.add_argument("--base", choices=["occlusion", "rise", "external"],
                   default=None, help="base saliency extractor "
                                      "(default occlusion)")
    p.add_argument("--adapter", default=None,
                   help="external adapter command (required with --base external)")
    p.add_argument("--rise-masks", type=int, default=None)
    p.add_argument("--rise-grid", type=int, default=None)
    p.add_argument("--rise-keep", type=float, default=None)
    p.add_argument("--occluder", type=int, default=None)
    p.add_argument("--occ-stride", type=int, default=None)
    p.add_argument("--occ-fill", type=float, default=None)
    p.add_argument("--out", default="sess-out", help="output directory")


def _load_config_file(path: str) -> tuple[dict, dict]:
    """Returns (pipeline config dict, manifest extras).

    Plain config files hold the pipeline fields directly. A run manifest
    embeds them under "config" and additionally records the model spec and
    base-method settings, which re-runs pick up unless overridden by flags.
    """
    text = Path(path).read_bytes()
    if path.endswith(".toml"):
        try:
            import tomllib

            data = tomllib.loads(text.decode())
        except ImportError:
            data = _parse_minimal_toml(text.decode())
    else:
        data = json.loads(text)
    extras = {}
    if "config" in data and isinstance(data["config"], dict):
        extras = {
            "model": (data.get("model") or {}).get("spec"),
            "meta": (data.get("model") or {}).get("meta"),
            "base": data.get("base") or {},
        }
        data = data["config"]
    return data, extras


def _parse_minimal_toml(text: str) -> dict:
    """Flat-table TOML subset for config files on Python < 3.11 (stdlib
    tomllib only exists from 3.11): [section] headers plus key = value lines
    with string/int/float/bool values."""
    data: dict = {}
    table = data
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            table = data.setdefault(line[1:-1].strip(), {})
            continue
        if "=" not in line:
            raise CliInputError(f"config line {lineno} is not 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if value.startswith(('"', "'")):
            table[key] = value[1:-1]
        elif value in ("true", "false"):
            table[key] = value == "true"
        else:
            try:
                table[key] = int(value)
            except ValueError:
                try:
                    table[key] = float(value)
                except ValueError as exc:
                    raise CliInputError(
                        f"config line {lineno}: unsupported value {value!r}"
                    ) from exc
    return data


_BASE_DEFAULTS = {
    "occlusion": {"occluder": 32, "stride": 16, "fill": 0.0},
    "rise": {"num_masks": 500, "grid": 7, "keep_prob": 0.5},
    "external": {"adapter": None},
}


def _resolve(args) -> tuple[SessConfig, ClassifierBackend, object, dict]:
    """Assemble config, backend and base method from flags plus an optional
    config file; returns (cfg, backend, base, run_info for the manifest)."""
    file_cfg, extras = ({}, {})
    if args.config:
        file_cfg, extras = _load_config_file(args.config)

    cfg = SessConfig.from_dict(
        {**SessConfig(smoothing=args.smooth_default).to_dict(), **file_cfg}
    )
    overrides = {}
    if args.target_class is not None:
        overrides["target_class"] = args.target_class
    if args.scales is not None:
        overrides["n_scales"] = args.scales
    if args.window is not None:
        overrides["window_w"] = args.window
        overrides["window_h"] = args.window
    if args.step is not None:
        overrides["step"] = args.step
    if args.prefilter is not None:
        overrides["prefilter_ratio"] = args.prefilter
    if args.theta is not None:
        overrides["theta"] = args.theta
    if args.smoothing is not None:
        overrides["smoothing"] = args.smoothing
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.batch is not None:
        overrides["batch_size"] = args.batch
    if overrides:
        cfg = cfg.replace(**overrides)

    model_spec = args.model or extras.get("model") or MOCK_MODEL
    if model_spec == MOCK_MODEL:
        backend: ClassifierBackend = make_quadrant_mock()
        backend.max_batch = cfg.batch_size
    else:
        meta = (args.meta or extras.get("meta")
                or str(Path(model_spec).with_suffix(".json")))
        backend = load_model(model_spec, meta, max_batch=cfg.batch_size)

    saved_base = extras.get("base") or {}
    method = args.base or saved_base.get("method") or "occlusion"
    knobs = dict(_BASE_DEFAULTS[method])
    knobs.update({k: v for k, v in saved_base.items() if k in knobs})
    flag_values = {
        "occluder": args.occluder, "stride": args.occ_stride,
        "fill": args.occ_fill, "num_masks": args.rise_masks,
        "grid": args.rise_grid, "keep_prob": args.rise_keep,
        "adapter": args.adapter,
    }
    knobs.update({k: v for k, v in flag_values.items()
                  if k in knobs and v is not None})

    if method == "occlusion":
        from .saliency import OcclusionConfig

        base = OcclusionMethod(OcclusionConfig(**knobs))
    elif method == "rise":
        base = RiseMethod(RiseConfig(**knobs, rng_seed=cfg.seed))
    else:
        if not knobs["adapter"]:
            raise CliInputError("--base external requires --adapter")
        base = ExternalMethod(knobs["adapter"])

    run_info = {
        "model_spec": model_spec,
        "meta": args.meta or extras.get("meta"),
        "base": {"method": method, **knobs},
    }
    return cfg, backend, base, run_info


def _num_workers() -> int:
    value = os.environ.get("SESS_NUM_WORKERS")
    return max(1, int(value)) if value else 1


def _model_hash(model_spec: str) -> str:
    if model_spec == MOCK_MODEL:
        return MOCK_MODEL
    return "sha256:" + hashlib.sha256(Path(model_spec).read_bytes()).hexdigest()


def _score_table(run) -> list[dict]:
    kept = set(int(i) for i in run.kept_indices)
    return [
        {
            "index": i,
            "scale": spec.scale_index,
            "scaled_h": spec.scaled_h,
            "scaled_w": spec.scaled_w,
            "x": spec.x,
            "y": spec.y,
            "score": float(score),
            "kept": i in kept,
        }
        for i, (spec, score) in enumerate(zip(run.specs, run.scores))
    ]


def _write_manifest(out_dir: Path, command: str, run_info: dict,
                    cfg: SessConfig, outputs: dict, extra: dict) -> Path:
    manifest = {
        "tool": f"sess {__version__}",
        "command": command,
        "config": cfg.to_dict(),
        "model": {
            "spec": run_info["model_spec"],
            "meta": run_info["meta"],
            "hash": _model_hash(run_info["model_spec"]),
        },
        "base": run_info["base"],
        "seed": cfg.seed,
        "outputs": {k: str(v) for k, v in outputs.items()},
        **extra,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def colorize(sal: np.ndarray) -> np.ndarray:
    """Map a [0, 1] saliency raster through the viridis lookup table."""
    import matplotlib

    lut = matplotlib.colormaps["viridis"]
    return lut(np.clip(sal, 0.0, 1.0))[:, :, :3].astype(np.float32)


def overlay(image: np.ndarray, sal: np.ndarray, alpha: float = 0.5) -> np.ndarray:
    return ((1.0 - alpha) * image + alpha * colorize(sal)).astype(np.float32)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_saliency(args) -> int:
    cfg, backend, base, run_info = _resolve(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    image = load_image(args.image)
    run = run_sess_detailed(image, backend, base, cfg, num_workers=_num_workers())
    render_start = time.perf_counter()

    outputs = {
        "saliency_png": out_dir / "saliency.png",
        "saliency_f32": out_dir / "saliency.f32",
        "overlay_png": out_dir / "overlay.png",
    }
    save_png(outputs["saliency_png"], run.saliency)
    write_f32(outputs["saliency_f32"], run.saliency)
    save_png(outputs["overlay_png"], overlay(image, run.saliency))

    timings = dict(run.timings_ms)
    timings["render_ms"] = 1000 * (time.perf_counter() - render_start)
    timings["total_ms"] = 1000 * (time.perf_counter() - started)
    _write_manifest(
        out_dir, "saliency", run_info, cfg, outputs,
        {
            "image": str(args.image),
            "dims": {"height": image.shape[0], "width": image.shape[1]},
            "patch_scores": _score_table(run),
            "timings_ms": timings,
        },
    )
    print(f"saliency written to {out_dir} "
          f"({len(run.kept_specs)}/{len(run.specs)} patches kept)")
    return EXIT_OK


def _eval_one_insdel(record, backend, base, cfg, workers,
                     fill: float = 0.0, keep_curves: bool = False) -> dict:
    image = load_image(record["image"])
    target = int(record["class"])
    run_cfg = cfg.replace(target_class=target)
    run = run_sess_detailed(image, backend, base, run_cfg, num_workers=workers)
    ins = insertion_curve(image, run.saliency, backend, target)
    dele = deletion_curve(image, run.saliency, backend, target, fill=fill)
    row = {
        "image": record["image"],
        "class": target,
        "insertion_auc": ins.auc,
        "deletion_auc": dele.auc,
        "overall": overall_score(ins, dele),
    }
    if keep_curves:
        row["curves"] = {
            kind: {"fractions": curve.fractions.tolist(),
                   "scores": curve.scores.tolist()}
            for kind, curve in (("insertion", ins), ("deletion", dele))
        }
    return row


def cmd_eval_insdel(args) -> int:
    cfg, backend, base, run_info = _resolve(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_annotations(args.dataset)
    for record in records:
        if "class" not in record:
            raise CliInputError(f"record for {record['image']} lacks 'class'")

    # resumable: completed rows checkpoint to JSONL keyed by (image, class)
    checkpoint = out_dir / "checkpoint.jsonl"
    done: dict = {}
    if checkpoint.exists():
        with open(checkpoint) as fh:
            for line in fh:
                row = json.loads(line)
                done[(row["image"], row["class"])] = row

    rows, failures = [], []
    workers = _num_workers()
    with open(checkpoint, "a") as ck:
        for record in records:
            key = (record["image"], int(record["class"]))
            if key in done:
                rows.append(done[key])
                continue
            try:
                row = _eval_one_insdel(record, backend, base, cfg, workers,
                                       fill=args.del_fill,
                                       keep_curves=args.curves)
            except Exception as exc:  # per-image failures logged, run continues
                failures.append({"image": record["image"], "error": str(exc)})
                print(f"warning: {record['image']} failed: {exc}", file=sys.stderr)
                continue
            ck.write(json.dumps(row) + "\n")
            ck.flush()
            rows.append(row)

    means = {
        key: float(np.mean([row[key] for row in rows])) if rows else float("nan")
        for key in ("insertion_auc", "deletion_auc", "overall")
    }
    report = {
        "config": cfg.to_dict(),
        "base": run_info["base"],
        "model": {"spec": run_info["model_spec"],
                  "hash": _model_hash(run_info["model_spec"])},
        "rows": rows,
        "failures": failures,
        "means": means,
        # percent, one decimal: the conventional presentation of these scores
        "means_percent": {k: round(100 * v, 1) for k, v in means.items()},
    }
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2))

    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "class", "insertion_auc", "deletion_auc", "overall"])
        for row in rows:
            writer.writerow([row["image"], row["class"],
                             f"{row['insertion_auc']:.6f}",
                             f"{row['deletion_auc']:.6f}",
                             f"{row['overall']:.6f}"])
        writer.writerow(["MEAN", "",
                         f"{means['insertion_auc']:.6f}",
                         f"{means['deletion_auc']:.6f}",
                         f"{means['overall']:.6f}"])

    _write_manifest(out_dir, "eval-insdel", run_info, cfg,
                    {"report": report_path, "summary": out_dir / "summary.csv"},
                    {"dataset": str(args.dataset), "evaluated": len(rows),
                     "failed": len(failures)})
    print(f"evaluated {len(rows)} images; means (percent): "
          f"ins {report['means_percent']['insertion_auc']:.1f} "
          f"del {report['means_percent']['deletion_auc']:.1f} "
          f"overall {report['means_percent']['overall']:.1f}")
    return EXIT_OK


def cmd_eval_pointing(args) -> int:
    cfg, backend, base, run_info = _resolve(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_annotations(args.dataset)

    results, difficult_results = [], []
    rows = []
    workers = _num_workers()
    for record in records:
        objects = record.get("objects") or []
        if not objects:
            raise CliInputError(f"record for {record['image']} lacks 'objects'")
        image = load_image(record["image"])
        for class_id in sorted({int(obj["class"]) for obj in objects}):
            boxes = [obj["bbox"] for obj in objects if int(obj["class"]) == class_id]
            run_cfg = cfg.replace(target_class=class_id)
            run = run_sess_detailed(image, backend, base, run_cfg,
                                    num_workers=workers)
            hit = pointing_game(run.saliency, boxes, tolerance=args.tolerance)
            results.append((class_id, hit))
            if record.get("difficult"):
                difficult_results.append((class_id, hit))
            rows.append({"image": record["image"], "class": class_id, "hit": hit,
                         "difficult": bool(record.get("difficult"))})

    all_stats = aggregate_pointing(results)
    report = {
        "config": cfg.to_dict(),
        "base": run_info["base"],
        "rows": rows,
        "all": {"per_class": all_stats.per_class, "mean_acc": all_stats.mean_acc},
    }
    if difficult_results:
        diff_stats = aggregate_pointing(difficult_results)
        report["difficult"] = {
            "per_class": diff_stats.per_class,
            "mean_acc": diff_stats.mean_acc,
        }

    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2))
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "hits", "misses", "acc"])
        for class_id, stats in all_stats.per_class.items():
            writer.writerow([class_id, stats["hits"], stats["misses"],
                             f"{stats['acc']:.4f}"])
        writer.writerow(["MEAN", "", "", f"{all_stats.mean_acc:.4f}"])

    _write_manifest(out_dir, "eval-pointing", run_info, cfg,
                    {"report": report_path, "summary": out_dir / "summary.csv"},
                    {"dataset": str(args.dataset)})
    line = f"pointing game: mean acc {all_stats.mean_acc:.3f} (all)"
    if difficult_results:
        line += f", {report['difficult']['mean_acc']:.3f} (difficult)"
    print(line)
    return EXIT_OK


def _parse_sweep_values(args) -> list[float]:
    if args.values:
        return [float(v) for v in args.values.split(",")]
    lo, hi = args.range.split(":")
    if args.axis == "scales":
        return list(range(int(lo), int(hi) + 1))
    return list(np.linspace(float(lo), float(hi), args.points))


def cmd_sweep(args) -> int:
    cfg, backend, base, run_info = _resolve(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_annotations(args.dataset)
    values = _parse_sweep_values(args)

    rows = []
    workers = _num_workers()
    partial = False
    for value in values:
        if args.axis == "scales":
            point_cfg = cfg.replace(n_scales=int(value))
        else:
            point_cfg = cfg.replace(prefilter_ratio=float(value))
        try:
            outs = [
                _eval_one_insdel(record, backend, base, point_cfg, workers)
                for record in records
            ]
        except Exception as exc:
            partial = True
            print(f"warning: sweep point {value} failed: {exc}", file=sys.stderr)
            continue
        rows.append({
            "value": value,
            "insertion_auc": float(np.mean([o["insertion_auc"] for o in outs])),
            "deletion_auc": float(np.mean([o["deletion_auc"] for o in outs])),
            "overall": float(np.mean([o["overall"] for o in outs])),
        })

    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([args.axis, "insertion_auc", "deletion_auc", "overall"])
        for row in rows:
            writer.writerow([row["value"], f"{row['insertion_auc']:.6f}",
                             f"{row['deletion_auc']:.6f}", f"{row['overall']:.6f}"])
    if partial:
        print("warning: sweep incomplete; partial CSV written", file=sys.stderr)

    plot_path = out_dir / "curves.png"
    _plot_sweep(rows, args.axis, plot_path)
    _write_manifest(out_dir, "sweep", run_info, cfg,
                    {"csv": csv_path, "plot": plot_path},
                    {"dataset": str(args.dataset), "axis": args.axis,
                     "points": len(rows), "partial": partial})
    print(f"sweep over {args.axis}: {len(rows)}/{len(values)} points -> {csv_path}")
    return EXIT_OK


def _plot_sweep(rows: list[dict], axis: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    xs = [row["value"] for row in rows]
    for ax, key, title in zip(
        axes,
        ("insertion_auc", "deletion_auc", "overall"),
        ("Insertion", "Deletion", "Overall"),
    ):
        ax.plot(xs, [row[key] for row in rows], marker="o")
        ax.set_xlabel(axis)
        ax.set_ylabel("AUC")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def cmd_inspect_patches(args) -> int:
    cfg, backend, base, run_info = _resolve(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    image = load_image(args.image)
    run = run_sess_detailed(image, backend, base, cfg, num_workers=_num_workers())
    montage = dump_patch_grid(run.stack, run.kept_specs)
    montage_path = out_dir / "montage.png"
    save_png(montage_path, montage)

    scores_path = out_dir / "scores.csv"
    with open(scores_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scale", "scaled_h", "scaled_w", "x", "y", "score"])
        for spec, score in zip(run.kept_specs, run.kept_scores):
            writer.writerow([spec.scale_index, spec.scaled_h, spec.scaled_w,
                             spec.x, spec.y, f"{float(score):.8f}"])

    _write_manifest(out_dir, "inspect-patches", run_info, cfg,
                    {"montage": montage_path, "scores": scores_path},
                    {"image": str(args.image),
                     "patch_scores": _score_table(run),
                     "timings_ms": run.timings_ms})
    print(f"montage with {run.stack.kept_count} tiles -> {montage_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sess",
        description="Multi-scale sliding-window saliency enhancement and "
                    "evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saliency", help="generate one enhanced saliency map")
    p.add_argument("image", help="input PNG/JPEG")
    _add_model_flags(p)
    _add_pipeline_flags(p, smooth_default=True)
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("eval-insdel", help="insertion/deletion benchmark")
    p.add_argument("dataset", help="JSONL manifest: {image, class} per line")
    p.add_argument("--curves", action="store_true",
                   help="embed per-image score curves in the report")
    p.add_argument("--del-fill", type=float, default=0.0,
                   help="pixel value written by deletion steps (default 0; "
                        "pass the dataset mean for mean-fill)")
    _add_model_flags(p)
    _add_pipeline_flags(p, smooth_default=False)
    p.set_defaults(func=cmd_eval_insdel)

    p = sub.add_parser("eval-pointing", help="Pointing Game benchmark")
    p.add_argument("dataset",
                   help="JSONL manifest: {image, objects: [{class, bbox}]}")
    p.add_argument("--tolerance", type=int, default=0,
                   help="pixel tolerance added around boxes (default 0)")
    _add_model_flags(p)
    _add_pipeline_flags(p, smooth_default=False)
    p.set_defaults(func=cmd_eval_pointing)

    p = sub.add_parser("sweep", help="ablation sweep over one config axis")
    p.add_argument("dataset", help="JSONL manifest: {image, class} per line")
    p.add_argument("--axis", choices=["scales", "prefilter"], required=True)
    p.add_argument("--range", default=None, help="lo:hi sweep range")
    p.add_argument("--values", default=None, help="explicit comma-separated values")
    p.add_argument("--points", type=int, default=10,
                   help="grid size when sweeping a real-valued axis by --range")
    _add_model_flags(p)
    _add_pipeline_flags(p, smooth_default=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect-patches",
                       help="montage of per-patch maps + score table")
    p.add_argument("image", help="input PNG/JPEG")
    _add_model_flags(p)
    _add_pipeline_flags(p, smooth_default=False)
    p.set_defaults(func=cmd_inspect_patches)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "sweep" and not (args.range or args.values):
        print("error: sweep requires --range or --values", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except _MODEL_ERRORS as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
