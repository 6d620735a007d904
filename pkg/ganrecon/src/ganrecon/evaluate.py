"""Checkpoint evaluation with the pipeline's metric definitions.

MSE, PSNR (10*log10(L^2/mse), +inf sentinel at zero error) and SSIM (11x11
Gaussian window, sigma 1.5, C1=(0.01 L)^2, C2=(0.03 L)^2, averaged over
fully contained windows) are recomputed here exactly as the simulation
toolkit defines them, and the CSV schema matches its metric reports
(recon,truth,mse,psnr,ssim rows plus mean and std summary rows).
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import torch
from scipy import ndimage

from .data import PairedDataset
from .io import save_image
from .train import load_generator

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def mse(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(np.mean(d * d))


def psnr(a: np.ndarray, b: np.ndarray, dynamic_range: float = 1.0) -> float:
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range**2 / err)


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-0.5 * (x / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a: np.ndarray, b: np.ndarray, dynamic_range: float = 1.0) -> float:
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the SSIM window: {a.shape}")
    k = _gaussian_window()
    half = SSIM_WINDOW // 2
    crop = (slice(half, -half), slice(half, -half))

    def smooth(x):
        return ndimage.correlate(x, k, mode="constant")[crop]

    mu_a = smooth(a)
    mu_b = smooth(b)
    var_a = smooth(a * a) - mu_a**2
    var_b = smooth(b * b) - mu_b**2
    cov = smooth(a * b) - mu_a * mu_b
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.clip(np.mean(num / den), -1.0, 1.0))


@torch.no_grad()
def evaluate(checkpoint_path, dataset: PairedDataset, csv_path, recon_dir=None) -> list:
    """Score the generator on every pair; returns the metric rows.

    Optionally saves each reconstruction as f32-raw under recon_dir so
    external tools can rescore the same files.
    """
    gen, config = load_generator(checkpoint_path)
    if recon_dir is not None:
        recon_dir = Path(recon_dir)
        recon_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for idx in range(len(dataset)):
        x, y = dataset[idx]
        out = gen(x[None])[0, 0].numpy().astype(np.float64)
        truth = y[0].numpy().astype(np.float64)
        recon_name = str(dataset.pairs[idx][0])
        if recon_dir is not None:
            path = recon_dir / f"recon_{idx:04d}.f32"
            save_image(out, path)
            recon_name = str(path)
        rows.append(
            {
                "recon": recon_name,
                "truth": str(dataset.pairs[idx][1]),
                "mse": mse(out, truth),
                "psnr": psnr(out, truth),
                "ssim": ssim(out, truth),
            }
        )
    with np.errstate(invalid="ignore"):
        for name, fn in (("mean", np.mean), ("std", np.std)):
            rows.append(
                {
                    "recon": name,
                    "truth": "",
                    "mse": float(fn([r["mse"] for r in rows if r["truth"]])),
                    "psnr": float(fn([r["psnr"] for r in rows if r["truth"]])),
                    "ssim": float(fn([r["ssim"] for r in rows if r["truth"]])),
                }
            )
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["recon", "truth", "mse", "psnr", "ssim"])
        for r in rows:
            writer.writerow([r["recon"], r["truth"], repr(r["mse"]), repr(r["psnr"]), repr(r["ssim"])])
    return rows
