"""
Identity reduction
==================

With one scale, no pre-filtering and smoothing disabled, the pipeline is a
no-op wrapper: on a square input it returns exactly the base method's
Min-Max-normalized map. This is the degenerate configuration that makes the
approach a strict generalization of whatever extractor it wraps.
"""

import numpy as np

from sess import (
    OcclusionMethod,
    SessConfig,
    make_quadrant_mock,
    minmax_normalize,
    occlusion_saliency,
    run_sess,
)

backend = make_quadrant_mock()

image = np.full((224, 224, 3), 0.05, dtype=np.float32)
image[20:90, 30:100] = 1.0

cfg = SessConfig(n_scales=1, prefilter_ratio=0.0, smoothing=False, target_class=0)
enhanced = run_sess(image, backend, OcclusionMethod(), cfg)

base = minmax_normalize(occlusion_saliency(image, 0, backend))

deviation = np.abs(enhanced - base).max()
print(f"max |enhanced - base| = {deviation:.2e}  (identity holds below 1e-6)")
assert deviation < 1e-6
