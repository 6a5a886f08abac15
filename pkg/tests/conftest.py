import numpy as np
import pytest

from se2n.checks import random_blob_image
from se2n.imagecore import Raster


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def blob_image(rng):
    return random_blob_image(rng, size=64)


def compact_blob(size: int = 64, sigma: float = 3.0, offsets=((0.0, 0.0),), amps=(150.0,)) -> Raster:
    """Smooth image decaying far below roundoff at the raster edge."""
    c = (size - 1) / 2.0
    xs, ys = np.meshgrid(np.arange(size, dtype=float), np.arange(size, dtype=float), indexing="xy")
    pix = np.zeros((size, size))
    for (dx, dy), amp in zip(offsets, amps):
        pix += amp * np.exp(-((xs - c - dx) ** 2 + (ys - c - dy) ** 2) / (2 * sigma**2))
    return Raster(pix)
