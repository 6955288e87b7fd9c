import warnings
from functools import lru_cache

import numpy as np
import pytest
from skimage import data as skdata

from chromabench.imageio import PlanarImage

# (skimage loader, row, col) for 256x256 crops of natural color images
CORPUS_SOURCES = (
    ("astronaut", 0, 128),
    ("chelsea", 0, 100),
    ("coffee", 100, 200),
    ("hubble_deep_field", 300, 300),
    ("immunohistochemistry", 200, 200),
    ("retina", 600, 600),
    ("rocket", 100, 200),
    ("stereo_motorcycle", 200, 300),
    ("astronaut", 256, 256),
    ("coffee", 0, 0),
)


@lru_cache(maxsize=None)
def _crop(name: str, r: int, c: int, size: int) -> PlanarImage:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        img = getattr(skdata, name)()
    if isinstance(img, tuple):  # stereo pairs
        img = img[0]
    crop = np.ascontiguousarray(img[r:r + size, c:c + size, :3])
    assert crop.shape == (size, size, 3), (name, crop.shape)
    return PlanarImage.from_bytes(crop)


def corpus(size: int = 256, count: int = 10) -> list[PlanarImage]:
    return [_crop(n, r, c, size) for n, r, c in CORPUS_SOURCES[:count]]


@pytest.fixture(scope="session")
def natural_corpus():
    return corpus()


@pytest.fixture(scope="session")
def small_natural():
    """Five 64x64 natural crops, cheap enough for per-test encoding."""
    return [_crop(n, r, c, 64) for n, r, c in CORPUS_SOURCES[:5]]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
