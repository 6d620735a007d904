"""Acoustic wave propagation through a phantom.

Fires one element of a ring transducer array into a two-inclusion speed map,
snapshots the wavefield as it crosses the grid, and plots the receiver
traces. Shows the sponge layer absorbing the wave at the edges.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wavesono.phantoms import phantom
from wavesono.solver import PAD, AcousticModel, forward, make_curvilinear_array, simulate_all_shots, _Propagator

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

n = 96
speed = phantom("two-inclusion", n)
model = AcousticModel(speed=speed, grid_spacing=5e-4)
geom = make_curvilinear_array(16, n / 2 - 4, ((n - 1) / 2, (n - 1) / 2), 2 * np.pi, (n, n),
                              central_frequency=3e5)
prop = _Propagator(model, geom)
print(f"grid {n}x{n} (padded {prop.shape_padded}), dt={prop.dt*1e6:.3f} us, {prop.nt} steps")
print(f"{prop.points_per_wavelength:.1f} grid points per wavelength")

traces, snaps = forward(model, geom, shot=0, record_wavefield=True, snapshot_stride=prop.nt // 6)

fig, axes = plt.subplots(1, 6, figsize=(18, 3.2))
scale = max(abs(s.field).max() for s in snaps[:6]) * 0.5
for ax, snap in zip(axes, snaps[:6]):
    view = snap.field[PAD:-PAD, PAD:-PAD]
    ax.imshow(view, cmap="seismic", vmin=-scale, vmax=scale)
    ax.set_title(f"t = {snap.time_index * prop.dt * 1e6:.1f} us")
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "02_wavefield.png", dpi=120)

# The full acquisition: every element takes a turn as emitter.
record = simulate_all_shots(model, geom)
print(f"shot record: {record.traces.shape} (shots x receivers x samples)")

fig, ax = plt.subplots(figsize=(7, 5))
t_axis = np.arange(record.traces.shape[2]) * record.dt * 1e6
offset = 0.8 * np.abs(record.traces[0]).max()
for j in range(record.traces.shape[1]):
    ax.plot(t_axis, record.traces[0, j] + j * offset, lw=0.6, color="k")
ax.set_xlabel("time (us)")
ax.set_ylabel("receiver index (offset)")
ax.set_title("shot 0: receiver traces")
fig.tight_layout()
fig.savefig(OUT / "02_traces.png", dpi=120)
print(f"figures saved to {OUT}")
