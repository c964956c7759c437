"""Export tool tests: sidecar schema, backend round-trip, and cross-runtime
top-1 parity between the in-framework model and the exported graph."""

from __future__ import annotations

import hashlib
import json
import warnings

import numpy as np
import pytest

torch = pytest.importorskip("torch")

from model_export import ExportFailed, ExportSpec, export_model
from model_export.cli import main as export_main

from sess.backend import forward_scores, load_model

SIDECAR_REQUIRED = {"input_size", "mean", "std", "emits_logits", "labels"}


def smoke_images(count: int, size: int = 224, seed: int = 0) -> np.ndarray:
    """Structured synthetic images: noise background plus bright rectangles,
    varied enough that per-image scores differ."""
    rng = np.random.default_rng(seed)
    images = rng.random((count, size, size, 3)).astype(np.float32) * 0.3
    for image in images:
        for _ in range(int(rng.integers(1, 4))):
            top, left = rng.integers(0, size - 60, size=2)
            h, w = rng.integers(30, 60, size=2)
            image[top : top + h, left : left + w] = rng.random(3)
    return images


@pytest.fixture(scope="session")
def verify_image(tmp_path_factory):
    from PIL import Image

    path = tmp_path_factory.mktemp("images") / "reference.png"
    pixels = (smoke_images(1, seed=42)[0] * 255).astype(np.uint8)
    Image.fromarray(pixels).save(path)
    return path


@pytest.fixture(scope="session")
def resnet50_export(tmp_path_factory, verify_image):
    out = tmp_path_factory.mktemp("resnet50")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # offline fallback warning is expected
        paths = export_model(
            ExportSpec(architecture="resnet50", out_dir=out,
                       verify_image=verify_image)
        )
    return paths


@pytest.fixture(scope="session")
def torch_resnet50(resnet50_export):
    """The same weights the export used (pretrained when downloadable,
    otherwise the seeded fallback)."""
    import torchvision.models as zoo

    meta = json.loads(resnet50_export["meta"].read_text())
    if meta["pretrained"]:
        model = zoo.get_model("resnet50", weights="DEFAULT")
    else:
        torch.manual_seed(0)
        model = zoo.get_model("resnet50", weights=None)
    return model.eval(), meta


class TestSidecarSchema:
    def test_required_fields_present(self, resnet50_export):
        meta = json.loads(resnet50_export["meta"].read_text())
        assert SIDECAR_REQUIRED <= set(meta)
        assert meta["input_size"] == 224
        assert len(meta["labels"]) == 1000
        assert len(meta["mean"]) == 3 and len(meta["std"]) == 3
        assert meta["emits_logits"] is True

    def test_loader_round_trip_without_warnings(self, resnet50_export):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            backend = load_model(resnet50_export["model"],
                                 resnet50_export["meta"])
        assert backend.input_size == 224
        assert backend.num_classes == 1000
        assert len(backend.labels) == 1000

    def test_vgg16_same_schema_different_hash(self, resnet50_export,
                                              tmp_path_factory):
        out = tmp_path_factory.mktemp("vgg16")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            paths = export_model(ExportSpec(architecture="vgg16", out_dir=out))
        meta = json.loads(paths["meta"].read_text())
        assert SIDECAR_REQUIRED <= set(meta)
        assert meta["input_size"] == 224

        def digest(path):
            return hashlib.sha256(path.read_bytes()).hexdigest()

        assert digest(paths["model"]) != digest(resnet50_export["model"])
        backend = load_model(paths["model"], paths["meta"])
        assert backend.num_classes == 1000


class TestCrossRuntimeParity:
    def test_verification_image_top1(self, resnet50_export):
        from sess.imgproc import load_image

        meta = json.loads(resnet50_export["meta"].read_text())
        assert "verification" in meta
        backend = load_model(resnet50_export["model"], resnet50_export["meta"])
        image = load_image(meta["verification"]["image"])
        from sess.imgproc import bilinear_resize

        patch = bilinear_resize(image, 224, 224)
        scores = forward_scores(backend, patch[None])[0]
        assert int(np.argmax(scores)) == meta["verification"]["top1"]

    def test_forty_image_smoke_agreement(self, resnet50_export, torch_resnet50):
        model, meta = torch_resnet50
        backend = load_model(resnet50_export["model"], resnet50_export["meta"])
        images = smoke_images(40, seed=7)

        got = forward_scores(backend, images, batch_size=8)

        mean = torch.tensor(meta["mean"]).view(1, 3, 1, 1)
        std = torch.tensor(meta["std"]).view(1, 3, 1, 1)
        x = (torch.from_numpy(images.transpose(0, 3, 1, 2)) - mean) / std
        with torch.no_grad():
            want = torch.softmax(model(x), dim=1).numpy()

        agreement = float(np.mean(got.argmax(axis=1) == want.argmax(axis=1)))
        assert agreement >= 0.95, f"top-1 agreement {agreement:.2%}"
        np.testing.assert_allclose(got, want, atol=1e-4)

    def test_exported_graph_batches_consistently(self, resnet50_export):
        backend = load_model(resnet50_export["model"], resnet50_export["meta"])
        images = smoke_images(4, seed=9)
        whole = forward_scores(backend, images)
        split = np.concatenate(
            [forward_scores(backend, images[:2]), forward_scores(backend, images[2:])]
        )
        np.testing.assert_allclose(whole, split, atol=1e-5)


class TestCli:
    def test_export_subcommand_token_accepted(self, tmp_path):
        code = export_main(["export", "--arch", "resnet18",
                            "--out", str(tmp_path), "--no-pretrained"])
        assert code == 0
        assert (tmp_path / "model.onnx").exists()
        assert (tmp_path / "model.json").exists()
        backend = load_model(tmp_path / "model.onnx", tmp_path / "model.json")
        assert backend.num_classes == 1000

    def test_unknown_architecture_fails_cleanly(self, tmp_path):
        assert export_main(["--arch", "not-a-model",
                            "--out", str(tmp_path)]) == 1

    def test_export_failed_type(self, tmp_path):
        with pytest.raises(ExportFailed):
            export_model(ExportSpec(architecture="not-a-model",
                                    out_dir=tmp_path))
