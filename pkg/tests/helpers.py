"""Shared measurement helpers for solver and inversion tests."""

import numpy as np

ONSET_THRESHOLD = 0.05


def onset_time(series: np.ndarray, dt: float, offset_steps: int = 0) -> float:
    """Time of the first sample whose magnitude reaches 5% of the series peak."""
    thr = ONSET_THRESHOLD * np.abs(series).max()
    idx = int(np.argmax(np.abs(series) >= thr))
    return (idx + offset_steps) * dt


def travel_time(trace: np.ndarray, wavelet: np.ndarray, dt: float) -> float:
    """First-arrival estimate: trace onset minus the wavelet's own onset.

    Trace sample t holds the field one step after injecting wavelet sample t,
    hence the one-step offset.
    """
    return onset_time(trace, dt, offset_steps=1) - onset_time(wavelet, dt)


def two_inclusion_speed(size: int) -> np.ndarray:
    grid = np.full((size, size), 1500.0)
    rows, cols = np.mgrid[0:size, 0:size].astype(float)
    r = size / 8.0
    c1, c2 = size * 0.35, size * 0.65
    grid[(rows - c1) ** 2 + (cols - c1) ** 2 < r**2] = 1450.0
    grid[(rows - c2) ** 2 + (cols - c2) ** 2 < r**2] = 1600.0
    return grid
