"""Recovering a speed map from receiver traces.

Twin experiment: simulate data through a known two-inclusion phantom, start
from a heavily blurred copy, and let the adjoint-state gradient descent
sharpen it back. Plots the objective curve and the model evolution.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wavesono.fwi import FwiConfig, invert, make_initial_model
from wavesono.phantoms import phantom
from wavesono.solver import AcousticModel, make_curvilinear_array, simulate_all_shots

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

n, dx = 64, 5e-4
truth_speed = phantom("two-inclusion", n)
truth = AcousticModel(speed=truth_speed, grid_spacing=dx)
geom = make_curvilinear_array(16, n / 2 - 4, ((n - 1) / 2, (n - 1) / 2), 2 * np.pi, (n, n),
                              central_frequency=3e5)

print("simulating observed data through the true model...")
observed = simulate_all_shots(truth, geom)

init = make_initial_model(truth_speed, sigma=8.0, grid_spacing=dx)
config = FwiConfig(num_iterations=12, step_size=0.01, init_blur_sigma=8.0,
                   gradient_smoothing_sigma=1.0, model_bounds=(1400.0, 1700.0))
print(f"inverting: {config.num_iterations} iterations, step {config.step_size}")
final, state = invert(observed, geom, config, init)

h = state.objective_history
rmse_init = np.sqrt(np.mean((init.speed - truth_speed) ** 2))
rmse_final = np.sqrt(np.mean((final.speed - truth_speed) ** 2))
print(f"objective: {h[0]:.3e} -> {h[-1]:.3e}  ({h[-1]/h[0]:.1%} of start)")
print(f"model rmse: {rmse_init:.1f} -> {rmse_final:.1f} m/s")

fig, axes = plt.subplots(1, 4, figsize=(15, 3.6))
vmin, vmax = truth_speed.min(), truth_speed.max()
for ax, (img, title) in zip(
    axes[:3],
    [(truth_speed, "true model"), (init.speed, "blurred start"), (final.speed, "reconstruction")],
):
    im = ax.imshow(img, cmap="viridis", vmin=vmin, vmax=vmax)
    ax.set_title(title)
    ax.axis("off")
    fig.colorbar(im, ax=ax, fraction=0.046)
axes[3].semilogy(h, "o-")
axes[3].set_xlabel("iteration")
axes[3].set_ylabel("misfit")
axes[3].set_title("objective history")
fig.tight_layout()
fig.savefig(OUT / "03_inversion.png", dpi=120)
print(f"figure saved to {OUT / '03_inversion.png'}")
