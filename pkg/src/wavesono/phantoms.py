"""Synthetic speed-of-sound phantoms used as stand-in inputs.

All phantoms are seed-reproducible speed maps in m/s. `normalize_speed`
turns them into [0,1] intensity images for the stages that need pixel
intensities.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

PHANTOM_KINDS = ("two-inclusion", "layered", "breast-like")

# default normalization window for turning speed maps into intensities
SPEED_WINDOW = (1400.0, 1650.0)


def phantom(kind: str, size: int, seed: int = 0) -> np.ndarray:
    """Build a size x size speed map of the requested kind.

    two-inclusion  1500 m/s background with a slow (1450) and a fast (1600)
                   disc, each of radius size/8, centered at ~1/3 and ~2/3 of
                   the diagonal
    layered        three horizontal bands at 1450/1540/1620 m/s
    breast-like    skin rim (1600), fat interior (1450), glandular blobs
                   (1540) and a tumor-like disc (1580) plus smooth seeded
                   texture; its value histogram is multi-modal
    """
    if kind not in PHANTOM_KINDS:
        raise ValidationError(f"unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")
    if size < 32:
        raise ValidationError(f"phantom size must be >= 32, got {size}")
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)

    if kind == "two-inclusion":
        grid = np.full((size, size), 1500.0)
        r = size / 8.0
        c1 = size * 0.35
        c2 = size * 0.65
        grid[(rows - c1) ** 2 + (cols - c1) ** 2 < r**2] = 1450.0
        grid[(rows - c2) ** 2 + (cols - c2) ** 2 < r**2] = 1600.0
        return grid

    if kind == "layered":
        grid = np.full((size, size), 1450.0)
        grid[size // 3 :, :] = 1540.0
        grid[2 * size // 3 :, :] = 1620.0
        return grid

    rng = np.random.default_rng(seed)
    grid = np.full((size, size), 1450.0)  # fat interior
    center = (size - 1) / 2.0
    rr = np.hypot(rows - center, cols - center)
    body = rr < size * 0.47
    grid[~body] = 1500.0                  # coupling water bath
    rim = body & (rr > size * 0.43)
    grid[rim] = 1600.0                    # skin
    # glandular blobs
    for _ in range(4):
        br = rng.uniform(size * 0.08, size * 0.14)
        ang = rng.uniform(0, 2 * np.pi)
        dist = rng.uniform(0, size * 0.22)
        cy = center + dist * np.sin(ang)
        cx = center + dist * np.cos(ang)
        grid[((rows - cy) ** 2 + (cols - cx) ** 2 < br**2) & body & ~rim] = 1540.0
    # one tumor-like inclusion
    ty = center + size * 0.12
    tx = center - size * 0.1
    grid[((rows - ty) ** 2 + (cols - tx) ** 2 < (size * 0.06) ** 2) & body & ~rim] = 1580.0
    # smooth seeded texture inside the body
    noise = rng.normal(0.0, 1.0, (size, size))
    kernel = np.ones(5) / 5.0
    noise = np.apply_along_axis(lambda m: np.convolve(m, kernel, mode="same"), 0, noise)
    noise = np.apply_along_axis(lambda m: np.convolve(m, kernel, mode="same"), 1, noise)
    grid[body] += 4.0 * noise[body]
    return grid


def normalize_speed(speed: np.ndarray, window: tuple = SPEED_WINDOW) -> np.ndarray:
    """Map a speed map into [0,1] intensities over a fixed window."""
    lo, hi = window
    if hi <= lo:
        raise ValidationError("normalization window must be ordered")
    return np.clip((np.asarray(speed, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)
