"""Model- and method-agnostic saliency enhancement.

Wraps any base saliency extractor: patches are taken from multiple scaled
copies of the input with a sliding window, pre-filtered by class score,
explained individually, calibrated back onto the original frame, and fused
with score-weighted indicator averaging.
"""

__version__ = "0.1.0"

from .backend import (
    ClassifierBackend,
    ModelMetadataError,
    OnnxBackend,
    QuadrantMock,
    UnsupportedModelError,
    forward_scores,
    load_model,
    make_quadrant_mock,
)
from .imgproc import (
    bilinear_resize,
    gaussian_blur,
    load_image,
    minmax_normalize,
    resize_shorter_side,
    save_png,
)
from .metrics import (
    CurveResult,
    PointingResult,
    aggregate_pointing,
    deletion_curve,
    insertion_curve,
    overall_score,
    pointing_game,
)
from .pipeline import (
    CalibratedStack,
    PatchSpec,
    SessConfig,
    apply_channel_weights,
    calibrate,
    dump_patch_grid,
    enumerate_patches,
    fuse,
    prefilter,
    run_sess,
    run_sess_detailed,
    scale_sizes,
    window_origins,
)
from .saliency import (
    BaseSaliencyMethod,
    ExternalMethod,
    OcclusionConfig,
    OcclusionMethod,
    RiseConfig,
    RiseMethod,
    external_saliency,
    occlusion_saliency,
    rise_saliency,
)

__all__ = [
    "__version__",
    "ClassifierBackend",
    "OnnxBackend",
    "QuadrantMock",
    "UnsupportedModelError",
    "ModelMetadataError",
    "load_model",
    "forward_scores",
    "make_quadrant_mock",
    "load_image",
    "save_png",
    "bilinear_resize",
    "resize_shorter_side",
    "gaussian_blur",
    "minmax_normalize",
    "SessConfig",
    "PatchSpec",
    "CalibratedStack",
    "scale_sizes",
    "window_origins",
    "enumerate_patches",
    "prefilter",
    "calibrate",
    "apply_channel_weights",
    "fuse",
    "run_sess",
    "run_sess_detailed",
    "dump_patch_grid",
    "BaseSaliencyMethod",
    "OcclusionConfig",
    "OcclusionMethod",
    "occlusion_saliency",
    "RiseConfig",
    "RiseMethod",
    "rise_saliency",
    "ExternalMethod",
    "external_saliency",
    "CurveResult",
    "PointingResult",
    "deletion_curve",
    "insertion_curve",
    "overall_score",
    "pointing_game",
    "aggregate_pointing",
]
