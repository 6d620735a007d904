"""Adjoint-state full-waveform inversion.

Recovers a speed-of-sound map from receiver traces by minimizing the
least-squares data misfit  sum_s 1/2 ||P u_s - d_s||^2  over the slowness
squared m = 1/c^2. The gradient comes from cross-correlating the stored
forward wavefield with a residual field propagated backward in time; model
updates are plain gradient descent with a max-norm-normalized step, clamped
to a speed interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import NumericalError, ValidationError
from .imaging import require_grid
from .solver import PAD, AcousticModel, AcquisitionGeometry, ShotRecord, _Propagator

ELEMENT_MASK_RADIUS = 2   # cells zeroed around each element (source singularity)


@dataclass(frozen=True)
class FwiConfig:
    num_iterations: int = 20
    step_rule: str = "fixed-normalized"
    step_size: float = 0.01             # fraction of max|m| moved per iteration
    init_blur_sigma: float = 8.0        # px
    gradient_smoothing_sigma: float = 1.0  # px; 0 disables
    model_bounds: tuple = (1400.0, 1700.0)  # m/s

    def __post_init__(self):
        if self.num_iterations < 1:
            raise ValidationError("num_iterations must be >= 1")
        if self.step_rule != "fixed-normalized":
            raise ValidationError(f"unknown step rule {self.step_rule!r}")
        if self.step_size <= 0:
            raise ValidationError("step_size must be positive")
        lo, hi = self.model_bounds
        if not lo < hi:
            raise ValidationError("model_bounds must be ordered (min, max)")
        if self.init_blur_sigma < 0 or self.gradient_smoothing_sigma < 0:
            raise ValidationError("blur sigmas must be non-negative")


@dataclass
class FwiState:
    current_model: AcousticModel
    iteration: int
    objective_history: list = field(default_factory=list)
    gradient: np.ndarray = None


def _check_record(geometry: AcquisitionGeometry, observed: ShotRecord) -> None:
    s, r, _ = observed.traces.shape
    if s != geometry.num_shots or r != geometry.num_elements:
        raise ValidationError(
            f"shot record {observed.traces.shape[:2]} does not match geometry "
            f"({geometry.num_shots} shots x {geometry.num_elements} receivers)"
        )


def _pin_time_axis(geometry: AcquisitionGeometry, observed: ShotRecord) -> AcquisitionGeometry:
    """Lock the geometry's dt and step count to the observed record's, so the
    residual stays sample-aligned while the model evolves."""
    from dataclasses import replace

    nt = observed.traces.shape[2]
    return replace(geometry, dt=observed.dt, duration=nt * observed.dt)


def element_mask(model_shape: tuple, geometry: AcquisitionGeometry, radius: int = ELEMENT_MASK_RADIUS) -> np.ndarray:
    """True where the gradient is trusted: everywhere except near elements."""
    mask = np.ones(model_shape, dtype=bool)
    h, w = model_shape
    for r, c in geometry.element_positions:
        mask[max(r - radius, 0) : r + radius + 1, max(c - radius, 0) : c + radius + 1] = False
    return mask


def objective(model: AcousticModel, geometry: AcquisitionGeometry, observed: ShotRecord) -> float:
    """Misfit 1/2 sum of squared trace residuals over all shots."""
    _check_record(geometry, observed)
    prop = _Propagator(model, _pin_time_axis(geometry, observed))
    if prop.nt != observed.traces.shape[2]:
        raise ValidationError(
            f"time axis mismatch: solver produces {prop.nt} steps, record has {observed.traces.shape[2]}"
        )
    total = 0.0
    for s in range(geometry.num_shots):
        traces, _, _ = prop.run(s)
        diff = traces - observed.traces[s]
        total += 0.5 * float(np.sum(diff * diff))
    return total


def gradient(
    model: AcousticModel,
    geometry: AcquisitionGeometry,
    observed: ShotRecord,
    smoothing_sigma: float = 0.0,
    return_objective: bool = False,
):
    """Adjoint-state misfit gradient w.r.t. slowness squared, on the model grid.

    The gradient is zeroed inside the absorbing layer (by construction: it
    is cropped to the physical grid) and within a couple of cells of every
    element. Shots accumulate in a fixed order, so repeated runs are
    bitwise identical.
    """
    _check_record(geometry, observed)
    prop = _Propagator(model, _pin_time_axis(geometry, observed))
    if prop.nt != observed.traces.shape[2]:
        raise ValidationError("time axis mismatch between solver and shot record")
    grad_pad = np.zeros(prop.shape_padded)
    total = 0.0
    for s in range(geometry.num_shots):
        traces, _, history = prop.run(s, store_history=True)
        residual = traces - observed.traces[s]
        total += 0.5 * float(np.sum(residual * residual))
        grad_pad += prop.run_adjoint(residual, history)
    grad = prop.crop_to_model(grad_pad)
    grad = np.where(element_mask(model.shape, geometry), grad, 0.0)
    if smoothing_sigma > 0:
        grad = ndimage.gaussian_filter(grad, smoothing_sigma, mode="nearest", truncate=3.0)
        grad = np.where(element_mask(model.shape, geometry), grad, 0.0)
    if return_objective:
        return grad, total
    return grad


def jacobian_apply(model: AcousticModel, geometry: AcquisitionGeometry, dm: np.ndarray, shot: int = 0) -> np.ndarray:
    """Born modeling: traces of the linearized response to a slowness-squared
    perturbation `dm` (model grid), for one shot."""
    dm = require_grid(dm, "dm")
    if dm.shape != model.shape:
        raise ValidationError("dm must match the model grid")
    prop = _Propagator(model, geometry)
    _, _, history = prop.run(shot, store_history=True)
    return prop.born_traces(prop.pad_model_grid(dm), history)


def jacobian_transpose(model: AcousticModel, geometry: AcquisitionGeometry, y: np.ndarray, shot: int = 0) -> np.ndarray:
    """Adjoint of jacobian_apply for one shot: data-space y -> model grid."""
    prop = _Propagator(model, geometry)
    if y.shape != (geometry.num_elements, prop.nt):
        raise ValidationError(f"y must be (num_receivers, nt) = {(geometry.num_elements, prop.nt)}")
    _, _, history = prop.run(shot, store_history=True)
    return prop.crop_to_model(prop.run_adjoint(np.asarray(y, dtype=np.float64), history))


def make_initial_model(true_speed, sigma: float, grid_spacing: float) -> AcousticModel:
    """Gaussian-blurred speed map (3-sigma truncation, edge replication)."""
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    speed = require_grid(true_speed, "true_speed")
    if sigma > 0:
        speed = ndimage.gaussian_filter(speed, sigma, mode="nearest", truncate=3.0)
    return AcousticModel(speed=speed, grid_spacing=grid_spacing)


def invert(
    observed: ShotRecord,
    geometry: AcquisitionGeometry,
    config: FwiConfig,
    init: AcousticModel,
    callback=None,
):
    """Gradient-descent inversion; returns (final model, FwiState).

    Each iteration moves m by step_size * max|m_0| along the
    max-norm-normalized negative gradient, then clamps speeds to
    config.model_bounds. objective_history holds num_iterations + 1 values
    (the initial misfit first). The speed upper bound is additionally
    tightened to the fastest speed stable at the record's dt, so every
    iterate can be simulated on the observed time axis.
    """
    from .solver import CFL_FACTOR

    lo, hi = config.model_bounds
    dx = init.grid_spacing
    cfl_speed = CFL_FACTOR * dx / (observed.dt * np.sqrt(2.0))
    hi = min(hi, cfl_speed)
    if lo >= hi:
        raise ValidationError(
            f"model_bounds minimum {lo} m/s exceeds the fastest speed {cfl_speed:.1f} m/s "
            "stable at the record's time step"
        )

    def clamp(m):
        speed = np.clip(1.0 / np.sqrt(m), lo, hi)
        return 1.0 / (speed * speed)

    geometry = _pin_time_axis(geometry, observed)
    m = clamp(init.slowness_sq)
    step = config.step_size * float(np.abs(m).max())
    history = []
    last_grad = None
    for it in range(config.num_iterations):
        model = AcousticModel.from_slowness_sq(m, dx)
        g, phi = gradient(model, geometry, observed, config.gradient_smoothing_sigma, return_objective=True)
        if not np.isfinite(phi):
            raise NumericalError(f"non-finite objective at iteration {it}; history so far: {history}")
        history.append(phi)
        last_grad = g
        gmax = float(np.abs(g).max())
        if gmax > 0:
            m = clamp(m - step * g / gmax)
        if callback is not None:
            callback(it, phi, g)
    final = AcousticModel.from_slowness_sq(m, dx)
    phi_final = objective(final, geometry, observed)
    if not np.isfinite(phi_final):
        raise NumericalError(f"non-finite final objective; history so far: {history}")
    history.append(phi_final)
    state = FwiState(
        current_model=final,
        iteration=config.num_iterations,
        objective_history=history,
        gradient=last_grad,
    )
    return final, state
