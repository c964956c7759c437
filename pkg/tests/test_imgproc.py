"""Raster primitive tests with closed-form oracles."""

from __future__ import annotations

import numpy as np
import pytest

from sess.imgproc import (
    bilinear_resize,
    gaussian_blur,
    gaussian_kernel1d,
    load_image,
    minmax_normalize,
    read_f32,
    resize_shorter_side,
    save_png,
    scaled_dims,
    write_f32,
)


class TestResizeShorterSide:
    @pytest.mark.parametrize(
        "in_h,in_w,target,out_h,out_w",
        [
            (448, 448, 224, 224, 224),       # uniform halving
            (448, 672, 224, 224, 336),       # exact 1/2 scale
            (375, 500, 288, 288, 384),       # 500 * 288/375 = 384
            (500, 375, 288, 384, 288),       # transposed case
            (224, 224, 224, 224, 224),
        ],
    )
    def test_dimensions(self, in_h, in_w, target, out_h, out_w):
        img = np.zeros((in_h, in_w, 3), dtype=np.float32)
        out = resize_shorter_side(img, target)
        assert out.shape == (out_h, out_w, 3)
        assert scaled_dims(in_h, in_w, target) == (out_h, out_w)

    def test_shorter_side_always_equals_target(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            h, w = rng.integers(1, 900, size=2)
            target = int(rng.integers(1, 500))
            oh, ow = scaled_dims(int(h), int(w), target)
            assert min(oh, ow) == target

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            scaled_dims(0, 100, 224)
        with pytest.raises(ValueError):
            scaled_dims(100, 100, 0)

    def test_round_trip_error_bounded_on_smooth_gradient(self):
        # sanity bound, not exactness: down to 224 and back
        h, w = 300, 400
        ys = np.linspace(0.0, 1.0, h)[:, None]
        xs = np.linspace(0.0, 1.0, w)[None, :]
        img = np.repeat(((ys + xs) / 2.0)[:, :, None], 3, axis=2).astype(np.float32)
        down = resize_shorter_side(img, 224)
        back = bilinear_resize(down, h, w)
        assert np.abs(back - img).max() < 0.25


class TestBilinearResize:
    def test_constant_maps_to_constant(self):
        out = bilinear_resize(np.full((5, 9), 0.7, dtype=np.float32), 13, 4)
        np.testing.assert_allclose(out, 0.7, atol=1e-6)

    def test_two_by_two_align_corners(self):
        grid = np.array([[0.0, 1.0], [0.0, 1.0]], dtype=np.float32)
        out = bilinear_resize(grid, 2, 4, align_corners=True)
        expected = np.array([0.0, 1 / 3, 2 / 3, 1.0], dtype=np.float32)
        np.testing.assert_allclose(out[0], expected, atol=1e-6)
        np.testing.assert_allclose(out[1], expected, atol=1e-6)

    def test_two_by_two_half_pixel(self):
        # half-pixel-center sampling: src = (dst + 0.5) * 2/4 - 0.5
        grid = np.array([[0.0, 1.0], [0.0, 1.0]], dtype=np.float32)
        out = bilinear_resize(grid, 2, 4)
        expected = np.array([0.0, 0.25, 0.75, 1.0], dtype=np.float32)
        np.testing.assert_allclose(out[0], expected, atol=1e-6)

    def test_identity(self):
        rng = np.random.default_rng(3)
        arr = rng.random((17, 23)).astype(np.float32)
        np.testing.assert_allclose(bilinear_resize(arr, 17, 23), arr, atol=1e-6)

    def test_rgb_supported(self):
        rng = np.random.default_rng(4)
        arr = rng.random((8, 8, 3)).astype(np.float32)
        assert bilinear_resize(arr, 16, 12).shape == (16, 12, 3)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            bilinear_resize(np.zeros((4, 4)), 0, 4)


class TestGaussianBlur:
    def test_constant_preserved(self):
        out = gaussian_blur(np.full((64, 64), 0.5, dtype=np.float32), 11, 5.0)
        np.testing.assert_allclose(out, 0.5, atol=1e-6)

    def test_impulse_center_equals_kernel_center_weight(self):
        # oracle: build the normalized kernel explicitly
        x = np.arange(-5, 6, dtype=np.float64)
        weights = np.exp(-(x * x) / (2 * 5.0 * 5.0))
        weights /= weights.sum()
        expected_center = weights[5] ** 2  # separable product at the impulse

        impulse = np.zeros((101, 101), dtype=np.float32)
        impulse[50, 50] = 1.0
        out = gaussian_blur(impulse, 11, 5.0)
        np.testing.assert_allclose(out[50, 50], expected_center, atol=1e-7)
        np.testing.assert_allclose(
            gaussian_kernel1d(11, 5.0), weights, atol=1e-12
        )

    def test_kernel_one_is_identity(self):
        rng = np.random.default_rng(5)
        arr = rng.random((20, 20)).astype(np.float32)
        np.testing.assert_array_equal(gaussian_blur(arr, 1, 5.0), arr)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            gaussian_blur(np.zeros((8, 8)), 10, 5.0)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ValueError):
            gaussian_blur(np.zeros((8, 8)), 11, 0.0)

    def test_mean_preserved_under_reflect(self):
        rng = np.random.default_rng(6)
        arr = rng.random((48, 72)).astype(np.float32)  # >= 4x kernel size
        out = gaussian_blur(arr, 11, 5.0)
        assert abs(float(out.mean()) - float(arr.mean())) < 1e-4


class TestMinMaxNormalize:
    def test_affine_rescale(self):
        np.testing.assert_allclose(
            minmax_normalize(np.array([2.0, 4.0, 6.0])), [0.0, 0.5, 1.0], atol=1e-7
        )

    def test_constant_maps_to_zeros(self):
        np.testing.assert_array_equal(
            minmax_normalize(np.array([3.0, 3.0, 3.0])), [0.0, 0.0, 0.0]
        )

    def test_negative_values(self):
        np.testing.assert_allclose(
            minmax_normalize(np.array([-1.0, 0.0, 1.0])), [0.0, 0.5, 1.0], atol=1e-7
        )

    def test_range_and_idempotence(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            arr = rng.normal(size=(11, 13)).astype(np.float32)
            out = minmax_normalize(arr)
            assert out.min() >= 0.0 and out.max() <= 1.0
            np.testing.assert_allclose(minmax_normalize(out), out, atol=1e-6)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            minmax_normalize(np.array([0.0, np.nan]))


class TestRasterIO:
    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        img = rng.random((15, 21, 3)).astype(np.float32)
        path = tmp_path / "img.png"
        save_png(path, img)
        back = load_image(path)
        assert back.shape == img.shape
        # 8-bit quantization bound
        assert np.abs(back - img).max() <= 0.5 / 255 + 1e-6

    def test_gray_png(self, tmp_path):
        sal = np.linspace(0, 1, 64, dtype=np.float32).reshape(8, 8)
        path = tmp_path / "sal.png"
        save_png(path, sal)
        assert load_image(path).shape == (8, 8, 3)

    def test_f32_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        sal = rng.random((12, 7)).astype(np.float32)
        path = tmp_path / "sal.f32"
        write_f32(path, sal)
        np.testing.assert_array_equal(read_f32(path, 12, 7), sal)

    def test_f32_size_mismatch(self, tmp_path):
        path = tmp_path / "bad.f32"
        write_f32(path, np.zeros((3, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            read_f32(path, 4, 4)
