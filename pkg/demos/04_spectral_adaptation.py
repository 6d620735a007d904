"""Shifting image style with high-frequency spectral swaps.

Takes a clean simulated image and a noisy reference, and replaces the high
band of the simulated image's Fourier spectrum with the reference's at a
sweep of beta values. Small beta keeps almost nothing of the source's high
frequencies (strong noise transfer); large beta keeps most of the source.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wavesono.fda import spectral_swap
from wavesono.phantoms import normalize_speed, phantom

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(0)
n = 128

# source: smooth simulated image; target: speckle-textured reference
source = normalize_speed(phantom("breast-like", n, seed=2))
speckle = rng.rayleigh(0.25, (n, n))
target = np.clip(source * 0.3 + speckle * 0.7, 0, 1)

betas = (0.01, 0.05, 0.09, 0.3)
fig, axes = plt.subplots(1, len(betas) + 2, figsize=(3 * (len(betas) + 2), 3.2))
axes[0].imshow(source, cmap="gray", vmin=0, vmax=1)
axes[0].set_title("source (simulated)")
axes[1].imshow(target, cmap="gray", vmin=0, vmax=1)
axes[1].set_title("target (reference)")
for ax, beta in zip(axes[2:], betas):
    adapted = spectral_swap(source, target, beta, mode="amplitude")
    ax.imshow(adapted, cmap="gray", vmin=0, vmax=1)
    ax.set_title(f"beta = {beta}")
    l2 = np.linalg.norm(adapted - source)
    print(f"beta={beta:<5} image distance to source: {l2:.2f}")
for ax in axes:
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "04_beta_sweep.png", dpi=120)
print(f"figure saved to {OUT / '04_beta_sweep.png'}")
