"""High-frequency spectral transfer between image pairs.

Shifts the style of a simulated image toward a reference image by replacing
the high-frequency band of its centered Fourier spectrum with the reference
image's, keeping the low band. The kept band is a centered square whose
half-width is floor(beta * min(H, W) / 2): beta=0 keeps only the DC bin,
beta=1 keeps the full min-dimension square.

Two splice modes:
  amplitude  swap amplitude spectra only; the output keeps the source phase
             everywhere (default)
  complex    swap full complex coefficients
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .imaging import require_grid, require_same_shape

_MODES = ("amplitude", "complex")


def fft2(grid) -> np.ndarray:
    """Unnormalized forward 2D DFT of a real image."""
    grid = require_grid(grid)
    if min(grid.shape) < 2:
        raise ValidationError("fft2 needs at least a 2x2 image")
    return np.fft.fft2(grid)


def ifft2(spectrum) -> np.ndarray:
    """Inverse 2D DFT (1/(H*W) normalization); small imaginary residue dropped."""
    return np.real(np.fft.ifft2(np.asarray(spectrum)))


def _band_mask(height: int, width: int, beta: float) -> np.ndarray:
    if not 0.0 <= beta <= 1.0:
        raise ValidationError(f"beta must be in [0, 1], got {beta}")
    half = int(np.floor(beta * min(height, width) / 2.0))
    cr, cc = height // 2, width // 2
    mask = np.zeros((height, width), dtype=bool)
    mask[max(cr - half, 0) : min(cr + half + 1, height), max(cc - half, 0) : min(cc + half + 1, width)] = True
    return mask


@dataclass(frozen=True)
class SpectralBandMask:
    """Low-band keep mask on the centered (DC-at-center) spectrum."""

    beta: float
    height: int
    width: int
    mask: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "mask", _band_mask(self.height, self.width, self.beta))


def splice_spectra(src_centered: np.ndarray, tgt_centered: np.ndarray, mask: np.ndarray, mode: str) -> np.ndarray:
    """Combine two centered spectra: mask-true bins from source, rest from target."""
    if mode not in _MODES:
        raise ValidationError(f"unknown splice mode {mode!r}; expected one of {_MODES}")
    if mode == "complex":
        return np.where(mask, src_centered, tgt_centered)
    amp = np.where(mask, np.abs(src_centered), np.abs(tgt_centered))
    phase = np.angle(src_centered)
    return amp * np.exp(1j * phase)


def spectral_swap(source, target, beta: float, mode: str = "amplitude", clamp: bool = True) -> np.ndarray:
    """Replace the high-frequency band of `source` with `target`'s.

    Returns the real part of the inverse transform, clamped to [0, 1]
    unless `clamp` is False.
    """
    source = require_grid(source, "source")
    target = require_grid(target, "target")
    require_same_shape(source, target)
    h, w = source.shape
    mask = _band_mask(h, w, beta)
    src_spec = np.fft.fftshift(fft2(source))
    tgt_spec = np.fft.fftshift(fft2(target))
    out_spec = splice_spectra(src_spec, tgt_spec, mask, mode)
    out = ifft2(np.fft.ifftshift(out_spec))
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def adapt_batch(
    sources,
    targets,
    beta: float,
    mode: str = "amplitude",
    pairing: str = "random-seeded",
    seed: int = 0,
) -> tuple:
    """Adapt each source against a paired target.

    Returns (adapted grids, pair indices). Random pairing draws a target
    index per source from a seeded generator, so runs are reproducible.
    """
    sources = list(sources)
    targets = list(targets)
    if not targets:
        raise ValidationError("adapt_batch needs a non-empty target set")
    if pairing == "random-seeded":
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, len(targets), size=len(sources))
    elif pairing == "index":
        idx = np.arange(len(sources)) % len(targets)
    else:
        raise ValidationError(f"unknown pairing rule {pairing!r}")
    adapted = [spectral_swap(src, targets[int(i)], beta, mode) for src, i in zip(sources, idx)]
    return adapted, [int(i) for i in idx]
