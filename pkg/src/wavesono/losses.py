"""Deterministic reconstruction losses and the weighted generator objective.

The generator objective is a weighted sum of a perceptual-slot term, an L1
term, and an adversarial term. The perceptual slot accepts any scalar loss;
besides the Laplacian and Haar-wavelet losses a lightweight multi-scale L1
pyramid is provided so the full objective is computable without a neural
feature extractor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .imaging import require_grid, require_same_shape

LOG_EPS = 1e-7

# 4-neighbor Laplacian; zero-sum kernel, so constants map to zero under
# edge-replicated padding
LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class LossWeights:
    """Weights (perceptual, l1, adversarial) of the generator objective."""

    perceptual: float = 0.0
    l1: float = 10.0
    adversarial: float = 1.0

    def __post_init__(self):
        for name, w in (("perceptual", self.perceptual), ("l1", self.l1), ("adversarial", self.adversarial)):
            if not np.isfinite(w) or w < 0:
                raise ValidationError(f"loss weight {name} must be finite and >= 0, got {w}")


@dataclass(frozen=True)
class LossReport:
    l1: float
    laplacian: float
    wavelet: float
    adversarial: float
    perceptual: float
    total: float

    def as_dict(self) -> dict:
        return {
            "l1": self.l1,
            "laplacian": self.laplacian,
            "wavelet": self.wavelet,
            "adversarial": self.adversarial,
            "perceptual": self.perceptual,
            "total": self.total,
        }


def l1_loss(a, b) -> float:
    """Mean absolute difference."""
    a = require_grid(a, "a")
    b = require_grid(b, "b")
    require_same_shape(a, b)
    return float(np.mean(np.abs(a - b)))


def laplacian_filter(grid) -> np.ndarray:
    """3x3 4-neighbor Laplacian with edge-replicated padding."""
    return ndimage.convolve(require_grid(grid), LAPLACIAN_KERNEL, mode="nearest")


def laplacian_loss(recon, truth) -> float:
    """L1 between Laplacian-filtered images; blind to global offsets."""
    recon = require_grid(recon, "recon")
    truth = require_grid(truth, "truth")
    require_same_shape(recon, truth)
    return float(np.mean(np.abs(laplacian_filter(recon) - laplacian_filter(truth))))


def haar2(grid) -> tuple:
    """Single-level orthonormal 2D Haar transform -> (LL, LH, HL, HH).

    The 1/2 normalization makes the transform orthonormal, so total energy
    is preserved across the four subbands.
    """
    grid = require_grid(grid)
    h, w = grid.shape
    if h % 2 or w % 2:
        raise ValidationError(f"Haar transform needs even dimensions, got {grid.shape}")
    a = grid[0::2, 0::2]
    b = grid[0::2, 1::2]
    c = grid[1::2, 0::2]
    d = grid[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a - b + c - d) / 2.0
    hl = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return ll, lh, hl, hh


def ihaar2(ll, lh, hl, hh) -> np.ndarray:
    """Inverse of haar2."""
    h2, w2 = ll.shape
    out = np.empty((2 * h2, 2 * w2), dtype=np.float64)
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


def wavelet_loss(recon, truth) -> float:
    """Mean of the per-subband L1 losses of the Haar-transformed images."""
    recon = require_grid(recon, "recon")
    truth = require_grid(truth, "truth")
    require_same_shape(recon, truth)
    bands_r = haar2(recon)
    bands_t = haar2(truth)
    return float(np.mean([np.mean(np.abs(r - t)) for r, t in zip(bands_r, bands_t)]))


def _downsample2(grid: np.ndarray) -> np.ndarray:
    h, w = grid.shape
    g = grid[: h - h % 2, : w - w % 2]
    return (g[0::2, 0::2] + g[0::2, 1::2] + g[1::2, 0::2] + g[1::2, 1::2]) / 4.0


def multiscale_l1(a, b, levels: int = 3) -> float:
    """Perceptual-slot stand-in: mean L1 over successively 2x-downsampled pairs."""
    a = require_grid(a, "a")
    b = require_grid(b, "b")
    require_same_shape(a, b)
    vals = []
    for _ in range(levels):
        a = _downsample2(a)
        b = _downsample2(b)
        if a.size == 0:
            break
        vals.append(np.mean(np.abs(a - b)))
    if not vals:
        raise ValidationError("image too small for the multi-scale loss")
    return float(np.mean(vals))


def adversarial_value(d_real, d_fake, eps: float = LOG_EPS) -> float:
    """Min-max objective value: E[log D(x)] + E[log(1 - D(G(z)))].

    Probabilities are clamped into [eps, 1-eps] so the value stays finite
    for saturated discriminator outputs.
    """
    d_real = np.asarray(d_real, dtype=np.float64)
    d_fake = np.asarray(d_fake, dtype=np.float64)
    if d_real.size == 0 or d_fake.size == 0:
        raise ValidationError("adversarial_value needs non-empty probability lists")
    d_real = np.clip(d_real, eps, 1.0 - eps)
    d_fake = np.clip(d_fake, eps, 1.0 - eps)
    return float(np.mean(np.log(d_real)) + np.mean(np.log(1.0 - d_fake)))


def generator_loss(perceptual: float, l1: float, adversarial: float, weights: LossWeights) -> float:
    """Weighted total: w_p * perceptual + w_l1 * l1 + w_adv * adversarial."""
    return weights.perceptual * perceptual + weights.l1 * l1 + weights.adversarial * adversarial


def build_loss_report(recon, truth, weights: LossWeights | None = None, adversarial: float = 0.0) -> LossReport:
    """All deterministic losses for an image pair, plus the weighted total.

    The adversarial term is an externally supplied value (0 when there is
    no discriminator in play); the perceptual slot uses the multi-scale L1
    stand-in.
    """
    weights = weights or LossWeights()
    l1 = l1_loss(recon, truth)
    perceptual = multiscale_l1(recon, truth)
    return LossReport(
        l1=l1,
        laplacian=laplacian_loss(recon, truth),
        wavelet=wavelet_loss(recon, truth),
        adversarial=adversarial,
        perceptual=perceptual,
        total=generator_loss(perceptual, l1, adversarial, weights),
    )
