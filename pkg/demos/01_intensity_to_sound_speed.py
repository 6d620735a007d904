"""From pixel intensities to an acoustic model.

Walks an intensity image through the tissue physics chain: affine map to
Hounsfield units, linear-attenuation composition for the bundled tissues,
piecewise-linear interpolation to a speed-of-sound map, and depth-dependent
attenuation. Saves a figure next to this script under output/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wavesono.phantoms import normalize_speed, phantom
from wavesono.tissue import (
    AttenuationParams,
    apply_attenuation,
    default_tissue_table,
    hounsfield,
    hu_to_sound_speed,
    intensity_to_hu,
    linear_attenuation,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# A synthetic "mammogram": a breast-like phantom rendered as intensities.
speed_truth = phantom("breast-like", 128, seed=1)
intensity = normalize_speed(speed_truth)
print(f"input intensity image: {intensity.shape}, range [{intensity.min():.2f}, {intensity.max():.2f}]")

# The bundled tissue table drives both directions of the mapping.
table = default_tissue_table()
print("\ntissue table (linear attenuation recomputed from elemental weights):")
for entry in table.entries:
    mu = linear_attenuation(entry)
    hu = hounsfield(mu, table.water_mu)
    print(
        f"  {entry.name:<11} rho={entry.density:7.4f} g/cm^3  mu={mu:6.3f} 1/cm  "
        f"HU(mu)={hu:8.1f}  anchor HU={entry.hu_anchor:7.1f}  c={entry.sound_speed_anchor:6.1f} m/s"
    )

# Intensity -> HU -> speed. The HU window is the breast-imaging sub-range.
hu_map = intensity_to_hu(intensity, hu_min=-100.0, hu_max=80.0)
speed = hu_to_sound_speed(hu_map, table)
print(f"\nspeed map range: [{speed.min():.0f}, {speed.max():.0f}] m/s")

# Depth attenuation: each row decays exponentially with depth.
attenuated = apply_attenuation(intensity, AttenuationParams(alpha_ref=40.0, pixel_size=5e-4))

fig, axes = plt.subplots(1, 4, figsize=(14, 3.5))
for ax, (img, title) in zip(
    axes,
    [
        (intensity, "input intensity"),
        (hu_map, "Hounsfield units"),
        (speed, "speed of sound (m/s)"),
        (attenuated, "depth-attenuated"),
    ],
):
    im = ax.imshow(img, cmap="gray")
    ax.set_title(title)
    ax.axis("off")
    fig.colorbar(im, ax=ax, fraction=0.046)
fig.tight_layout()
fig.savefig(OUT / "01_tissue_chain.png", dpi=120)
print(f"\nfigure saved to {OUT / '01_tissue_chain.png'}")
