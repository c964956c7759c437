"""Raster primitives: loading, resizing, Gaussian filtering, normalization.

Images are float32 arrays in [0, 1]: RGB rasters are (H, W, 3), saliency
maps are single-channel (H, W). All functions are pure and safe to call
concurrently.
"""

from __future__ import annotations

import numpy as np
from PIL import Image
from scipy.ndimage import convolve1d

__all__ = [
    "load_image",
    "save_png",
    "write_f32",
    "read_f32",
    "scaled_dims",
    "resize_shorter_side",
    "bilinear_resize",
    "gaussian_blur",
    "gaussian_kernel1d",
    "minmax_normalize",
]


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG file into an (H, W, 3) float32 RGB array in [0, 1]."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"degenerate image {arr.shape[:2]} in {path!r}")
    return arr


def save_png(path, arr: np.ndarray) -> None:
    """Write a [0, 1] float array as an 8-bit PNG (grayscale for 2D, RGB for 3D)."""
    data = np.clip(np.asarray(arr, dtype=np.float32), 0.0, 1.0)
    quantized = np.round(data * 255.0).astype(np.uint8)
    mode = "L" if quantized.ndim == 2 else "RGB"
    Image.fromarray(quantized, mode=mode).save(path, format="PNG")


def write_f32(path, arr: np.ndarray) -> None:
    """Write a map as raw little-endian float32, row-major."""
    np.asarray(arr, dtype="<f4").tofile(path)


def read_f32(path, height: int, width: int) -> np.ndarray:
    """Read a raw little-endian float32 raster of known dimensions."""
    data = np.fromfile(path, dtype="<f4")
    if data.size != height * width:
        raise ValueError(
            f"raster {path!r} holds {data.size} values, expected {height * width}"
        )
    return data.reshape(height, width)


def scaled_dims(height: int, width: int, target: int) -> tuple[int, int]:
    """Output dimensions when the shorter side is resized to `target`.

    The longer side is rounded to the nearest integer (minimum 1) so the
    aspect ratio is preserved up to rounding.
    """
    if height < 1 or width < 1:
        raise ValueError(f"degenerate image dimensions {height}x{width}")
    if target < 1:
        raise ValueError(f"target side must be >= 1, got {target}")
    if height <= width:
        out_h = target
        out_w = max(1, int(round(width * target / height)))
    else:
        out_w = target
        out_h = max(1, int(round(height * target / width)))
    return out_h, out_w


def resize_shorter_side(img: np.ndarray, target: int) -> np.ndarray:
    """Resize so the shorter side equals `target`, keeping aspect ratio."""
    out_h, out_w = scaled_dims(img.shape[0], img.shape[1], target)
    return bilinear_resize(img, out_h, out_w)


def bilinear_resize(
    arr: np.ndarray, out_h: int, out_w: int, align_corners: bool = False
) -> np.ndarray:
    """Bilinear resampling of a 2D map or (H, W, C) image.

    Parameters
    ----------
    arr:
        Input array, 2D or 3D.
    out_h, out_w:
        Output dimensions, both >= 1.
    align_corners:
        False (default) maps half-pixel centers: src = (dst + 0.5) * in/out - 0.5.
        True maps corner samples: src = dst * (in - 1) / (out - 1).

    Constant inputs map to the same constant, and same-size calls return an
    exact copy.
    """
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected 2D or 3D array, got shape {arr.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"degenerate output size {out_h}x{out_w}")

    in_h, in_w = arr.shape[0], arr.shape[1]
    if (in_h, in_w) == (out_h, out_w):
        return arr.copy()

    ys = _source_coords(out_h, in_h, align_corners)
    xs = _source_coords(out_w, in_w, align_corners)

    y0 = np.clip(np.floor(ys).astype(np.int64), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0).astype(np.float32)
    wx = np.clip(xs - x0, 0.0, 1.0).astype(np.float32)

    if arr.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]

    top = arr[y0][:, x0] * (1.0 - wx) + arr[y0][:, x1] * wx
    bottom = arr[y1][:, x0] * (1.0 - wx) + arr[y1][:, x1] * wx
    return (top * (1.0 - wy) + bottom * wy).astype(np.float32)


def _source_coords(out_len: int, in_len: int, align_corners: bool) -> np.ndarray:
    idx = np.arange(out_len, dtype=np.float64)
    if align_corners:
        if out_len == 1:
            return np.zeros(1)
        return idx * (in_len - 1) / (out_len - 1)
    return (idx + 0.5) * (in_len / out_len) - 0.5


def gaussian_kernel1d(kernel: int, sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian kernel of odd width `kernel`."""
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {kernel}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = kernel // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def gaussian_blur(arr: np.ndarray, kernel: int, sigma: float) -> np.ndarray:
    """Separable Gaussian convolution with reflected borders.

    Accepts a 2D map or an (H, W, C) image (each channel filtered
    independently). Output has the input's shape; a width-1 kernel is the
    identity.
    """
    weights = gaussian_kernel1d(kernel, sigma)
    if kernel == 1:
        return np.asarray(arr, dtype=np.float32).copy()
    out = np.asarray(arr, dtype=np.float32)
    out = convolve1d(out, weights, axis=0, mode="reflect")
    out = convolve1d(out, weights, axis=1, mode="reflect")
    return out.astype(np.float32)


def minmax_normalize(arr: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; a constant input maps to all zeros.

    The degenerate case is deliberate: a constant saliency map carries no
    information and must not saturate fusion.
    """
    arr = np.asarray(arr, dtype=np.float32)
    if not np.all(np.isfinite(arr)):
        raise ValueError("map contains non-finite values")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi <= lo:
        return np.zeros_like(arr)
    return (arr - lo) / np.float32(hi - lo)
