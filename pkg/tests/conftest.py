"""Shared fixtures: the deterministic mock backend, synthetic images, and an
ONNX fixture model written once per session."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from onnx_fixture import quadrant_classifier_bytes, quadrant_sidecar

from sess.backend import make_quadrant_mock


@pytest.fixture
def mock_backend():
    return make_quadrant_mock()


@pytest.fixture(scope="session")
def quadrant_onnx(tmp_path_factory):
    """Paths of an ONNX file + sidecar replicating the quadrant mock."""
    root = tmp_path_factory.mktemp("onnx-fixture")
    model_path = root / "quadrant.onnx"
    meta_path = root / "quadrant.json"
    model_path.write_bytes(quadrant_classifier_bytes())
    meta_path.write_text(json.dumps(quadrant_sidecar()))
    return model_path, meta_path


def make_bright_square(height: int, width: int, top: int, left: int,
                       side: int, background: float = 0.1,
                       brightness: float = 1.0) -> np.ndarray:
    """RGB image of constant background with one bright square."""
    image = np.full((height, width, 3), background, dtype=np.float32)
    image[top : top + side, left : left + side] = brightness
    return image


@pytest.fixture
def bright_square():
    return make_bright_square
