"""
Inspecting the calibrated patch stack
=====================================

Every kept patch contributes one weighted layer to the fusion. Rendering the
stack as a montage (one row per scale, red box = the patch's source window)
shows which regions and scales drive the final map, and the per-patch score
table shows what the pre-filter saw.
"""

from pathlib import Path

import numpy as np

from sess import (
    OcclusionMethod,
    SessConfig,
    dump_patch_grid,
    make_quadrant_mock,
    run_sess_detailed,
    save_png,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

backend = make_quadrant_mock()

image = np.full((300, 450, 3), 0.05, dtype=np.float32)
image[20:80, 30:90] = 1.0

cfg = SessConfig(n_scales=3, prefilter_ratio=30.0, smoothing=False,
                 target_class=0)
run = run_sess_detailed(image, backend, OcclusionMethod(), cfg)

print(f"{len(run.specs)} patches enumerated, {run.stack.kept_count} kept")
print(f"{'scale':>5} {'frame':>9} {'origin':>10} {'score':>8}")
for spec, score in zip(run.kept_specs, run.kept_scores):
    print(f"{spec.scale_index:>5} {spec.scaled_w:>4}x{spec.scaled_h:<4} "
          f"({spec.x:>3},{spec.y:>3}) {score:>8.4f}")

montage = dump_patch_grid(run.stack, run.kept_specs)
save_png(out_dir / "patch_montage.png", montage)
save_png(out_dir / "fused.png", run.saliency)
print(f"wrote {out_dir}/patch_montage.png and fused.png")
print("stage timings:",
      {k: f"{v:.0f}ms" for k, v in run.timings_ms.items()})
