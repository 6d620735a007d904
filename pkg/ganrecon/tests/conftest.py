from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from ganrecon.data import PairedDataset
from ganrecon.io import save_image


def make_blob_pairs(directory: Path, count: int, size: int = 64, seed: int = 0):
    """Synthetic paired dataset: smooth blob targets, degraded inputs."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    pairs = []
    for k in range(count):
        target = np.zeros((size, size))
        for _ in range(3):
            cy, cx, r = rng.uniform(10, size - 10), rng.uniform(10, size - 10), rng.uniform(5, 12)
            target[(yy - cy) ** 2 + (xx - cx) ** 2 < r**2] += 0.4
        target = np.clip(target, 0, 1)
        degraded = np.clip(gaussian_filter(target, 2.0) * rng.rayleigh(0.8, target.shape), 0, 1)
        tpath = directory / f"target_{k:03d}.f32"
        ipath = directory / f"input_{k:03d}.f32"
        save_image(target, tpath)
        save_image(degraded, ipath)
        pairs.append((ipath, tpath))
    return pairs


@pytest.fixture(scope="session")
def blob_dataset(tmp_path_factory):
    directory = tmp_path_factory.mktemp("pairs")
    return PairedDataset(make_blob_pairs(directory, 50))


@pytest.fixture
def rng():
    return np.random.default_rng(777)
