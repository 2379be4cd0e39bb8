import numpy as np
import pytest

from qbrush.brushes import CanvasImage
from qbrush.vqe import precompute_grid


@pytest.fixture(scope="session")
def family_dir(tmp_path_factory):
    """Small precomputed family grid shared across service/CLI tests."""
    directory = tmp_path_factory.mktemp("families")
    precompute_grid(directory, count=10)
    return directory


def build_fixture_canvas(width=64, height=48, seed=7) -> CanvasImage:
    rng = np.random.default_rng(seed)
    px = np.zeros((height, width, 4), dtype=np.uint8)
    px[:, :, :3] = rng.integers(0, 40, size=(height, width, 3))
    px[:, : width // 2, 0] += 180
    px[:, width // 2 :, 2] += 180
    px[:, :, 3] = 255
    return CanvasImage(px)


@pytest.fixture()
def fixture_png() -> bytes:
    return build_fixture_canvas().to_png()
