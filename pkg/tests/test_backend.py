"""Backend contract tests: the quadrant mock, the ONNX loader, and batching."""

from __future__ import annotations

import json

import numpy as np
import pytest

from onnx_fixture import model, node, quadrant_sidecar, tensor, value_info

from sess.backend import (
    ModelMetadataError,
    OnnxDecodeError,
    UnsupportedModelError,
    forward_scores,
    load_model,
    make_quadrant_mock,
)


def random_patches(count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.random((count, 224, 224, 3)).astype(np.float32)


class TestQuadrantMock:
    def test_black_patch_uniform(self, mock_backend):
        scores = forward_scores(mock_backend, np.zeros((1, 224, 224, 3), np.float32))
        np.testing.assert_allclose(scores[0], [0.25, 0.25, 0.25, 0.25], atol=1e-12)

    def test_bright_quadrant_wins(self, mock_backend):
        for q, (ys, xs) in enumerate(
            [(slice(0, 112), slice(0, 112)), (slice(0, 112), slice(112, None)),
             (slice(112, None), slice(0, 112)), (slice(112, None), slice(112, None))]
        ):
            patch = np.zeros((224, 224, 3), dtype=np.float32)
            patch[ys, xs] = 1.0
            scores = forward_scores(mock_backend, patch[None])[0]
            assert int(np.argmax(scores)) == q

    def test_monotone_in_own_quadrant(self, mock_backend):
        dim = np.zeros((224, 224, 3), dtype=np.float32)
        dim[:112, :112] = 0.4
        bright = np.zeros((224, 224, 3), dtype=np.float32)
        bright[:112, :112] = 0.9
        scores = forward_scores(mock_backend, np.stack([dim, bright]))
        assert scores[1, 0] > scores[0, 0]

    def test_rows_are_probabilities(self, mock_backend):
        scores = forward_scores(mock_backend, random_patches(6, seed=1))
        assert np.all(scores >= 0) and np.all(scores <= 1)
        np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-4)

    def test_determinism_bit_identical(self, mock_backend):
        patches = random_patches(3, seed=2)
        a = forward_scores(mock_backend, patches)
        b = forward_scores(mock_backend, patches)
        np.testing.assert_array_equal(a, b)

    def test_identical_patches_identical_rows(self, mock_backend):
        patch = random_patches(1, seed=3)[0]
        scores = forward_scores(mock_backend, np.stack([patch, patch]))
        np.testing.assert_array_equal(scores[0], scores[1])

    def test_batch_invariance(self, mock_backend):
        patches = random_patches(7, seed=4)
        whole = forward_scores(mock_backend, patches)
        parts = np.concatenate(
            [forward_scores(mock_backend, patches[:3]),
             forward_scores(mock_backend, patches[3:])]
        )
        np.testing.assert_allclose(whole, parts, atol=1e-5)

    def test_empty_batch_rejected(self, mock_backend):
        with pytest.raises(ValueError):
            forward_scores(mock_backend, np.zeros((0, 224, 224, 3), np.float32))

    def test_wrong_patch_size_rejected(self, mock_backend):
        with pytest.raises(ValueError):
            forward_scores(mock_backend, np.zeros((1, 100, 100, 3), np.float32))

    def test_mock_requires_four_classes(self):
        with pytest.raises(ValueError):
            make_quadrant_mock(num_classes=10)


class TestOnnxBackend:
    def test_load_introspects_graph(self, quadrant_onnx):
        model_path, meta_path = quadrant_onnx
        backend = load_model(model_path, meta_path)
        assert backend.input_size == 224
        assert backend.num_classes == 4
        assert len(backend.labels) == 4

    def test_parity_with_mock(self, quadrant_onnx, mock_backend):
        # the fixture graph computes the mock's quadrant-mean logits exactly
        model_path, meta_path = quadrant_onnx
        backend = load_model(model_path, meta_path)
        patches = random_patches(5, seed=5)
        np.testing.assert_allclose(
            forward_scores(backend, patches),
            forward_scores(mock_backend, patches),
            atol=1e-5,
        )

    def test_onnx_determinism(self, quadrant_onnx):
        model_path, meta_path = quadrant_onnx
        backend = load_model(model_path, meta_path)
        patches = random_patches(2, seed=6)
        np.testing.assert_allclose(
            forward_scores(backend, patches),
            forward_scores(backend, patches),
            atol=1e-5,
        )

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "missing.onnx", quadrant_sidecar())

    def test_unreadable_bytes(self, tmp_path):
        path = tmp_path / "junk.onnx"
        path.write_bytes(b"definitely not protobuf \xff\xff\xff")
        with pytest.raises(OnnxDecodeError):
            load_model(path, quadrant_sidecar())

    def test_two_inputs_rejected(self, tmp_path):
        two_input = model(
            [node("Add", ["a", "b"], ["out"])],
            inputs=[value_info("a", ["batch", 3, 224, 224]),
                    value_info("b", ["batch", 3, 224, 224])],
            outputs=[value_info("out", ["batch", 3, 224, 224])],
        )
        path = tmp_path / "two.onnx"
        path.write_bytes(two_input)
        with pytest.raises(UnsupportedModelError):
            load_model(path, quadrant_sidecar())

    def test_non_square_input_rejected(self, tmp_path):
        bad = model(
            [node("Identity", ["input"], ["out"])],
            inputs=[value_info("input", ["batch", 3, 224, 100])],
            outputs=[value_info("out", ["batch", 3, 224, 100])],
        )
        path = tmp_path / "bad.onnx"
        path.write_bytes(bad)
        with pytest.raises(UnsupportedModelError):
            load_model(path, quadrant_sidecar())

    def test_missing_metadata_field(self, quadrant_onnx):
        model_path, _ = quadrant_onnx
        meta = quadrant_sidecar()
        del meta["mean"]
        with pytest.raises(ModelMetadataError):
            load_model(model_path, meta)

    def test_metadata_graph_mismatch(self, quadrant_onnx):
        model_path, _ = quadrant_onnx
        meta = quadrant_sidecar()
        meta["input_size"] = 256
        with pytest.raises(ModelMetadataError):
            load_model(model_path, meta)

    def test_malformed_sidecar_json(self, quadrant_onnx, tmp_path):
        model_path, _ = quadrant_onnx
        bad = tmp_path / "meta.json"
        bad.write_text("{not json")
        with pytest.raises(ModelMetadataError):
            load_model(model_path, bad)

    def test_label_count_mismatch(self, quadrant_onnx):
        model_path, _ = quadrant_onnx
        meta = quadrant_sidecar()
        meta["labels"] = ["just-one"]
        with pytest.raises(ModelMetadataError):
            load_model(model_path, meta)

    def test_preprocessing_applied(self, quadrant_onnx, tmp_path):
        # shifting the mean by the patch value zeroes every logit
        model_path, _ = quadrant_onnx
        meta = quadrant_sidecar()
        meta["mean"] = [0.5, 0.5, 0.5]
        meta_path = tmp_path / "meta.json"
        meta_path.write_text(json.dumps(meta))
        backend = load_model(model_path, meta_path)
        patch = np.full((1, 224, 224, 3), 0.5, dtype=np.float32)
        np.testing.assert_allclose(
            forward_scores(backend, patch)[0], [0.25] * 4, atol=1e-6
        )

    def test_logit_mode_flag(self, quadrant_onnx):
        model_path, meta_path = quadrant_onnx
        backend = load_model(model_path, meta_path, softmax_scores=False)
        patch = np.full((1, 224, 224, 3), 0.5, dtype=np.float32)
        logits = forward_scores(backend, patch)[0]
        np.testing.assert_allclose(logits, 0.5, atol=1e-5)  # raw quadrant means
