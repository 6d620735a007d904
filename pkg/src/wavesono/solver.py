"""2D constant-density acoustic wave propagation with transducer arrays.

Solves m * u_tt = laplacian(u) + q with m = 1/c^2 on a padded grid:
leapfrog in time (2nd order), centered 4th-order Laplacian in space, and a
cosine-tapered damping layer (sponge) absorbing outgoing waves. The damping
enters as a friction term, which keeps the discrete one-step operator
symmetric in space; as a consequence receiver/source reciprocity holds and
the adjoint of the full propagation is the same kernel run backward in time.

Index convention: fields are (row, col) arrays; element positions are
(row, col) cells of the physical grid. The physical grid is embedded in a
computational grid padded by SPONGE_CELLS of absorbing layer plus
GHOST_CELLS of zero-Dirichlet rim on every side.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import CflViolationError, NumericalError, ValidationError
from .imaging import require_grid

CFL_FACTOR = 0.5                 # dt <= CFL_FACTOR * dx / (c_max * sqrt(2))
SPONGE_CELLS = 40
GHOST_CELLS = 2                  # half-width of the 4th-order stencil
PAD = SPONGE_CELLS + GHOST_CELLS
ARRAY_MARGIN = 2                 # cells kept clear at linear-array ends
SPEED_BAND = (300.0, 4000.0)
BLOWUP_FACTOR = 1e6              # |field| ceiling relative to source peak
SPONGE_STRENGTH = 3.0            # peak damping, units of c_max/dx

DEFAULT_FREQUENCY = 3.0e5        # Hz; ~10 grid points per wavelength at 0.5 mm
DISPERSION_POINTS_PER_WAVELENGTH = 10.0
DISPERSION_WARN_FRACTION = 0.95  # warn only below this fraction of the target

_STENCIL = (-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0)


@dataclass(frozen=True)
class AcousticModel:
    """Speed-of-sound map (m/s) on an isotropic grid."""

    speed: np.ndarray
    grid_spacing: float          # m

    def __post_init__(self):
        speed = require_grid(self.speed, "speed")
        object.__setattr__(self, "speed", speed)
        if self.grid_spacing <= 0:
            raise ValidationError("grid_spacing must be positive")
        lo, hi = SPEED_BAND
        if speed.min() < lo or speed.max() > hi:
            raise ValidationError(
                f"speeds [{speed.min():.1f}, {speed.max():.1f}] outside sanity band {SPEED_BAND}"
            )

    @property
    def slowness_sq(self) -> np.ndarray:
        """m = 1/c^2 (s^2/m^2), the inversion parameterization."""
        return 1.0 / (self.speed * self.speed)

    @property
    def shape(self) -> tuple:
        return self.speed.shape

    @classmethod
    def from_slowness_sq(cls, m: np.ndarray, grid_spacing: float) -> "AcousticModel":
        if np.any(m <= 0):
            raise ValidationError("slowness squared must be positive")
        return cls(speed=1.0 / np.sqrt(m), grid_spacing=grid_spacing)


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Transducer array layout and recording parameters.

    dt may be None, meaning "use the stability bound of the model at run
    time". An explicit dt that violates the bound makes forward() refuse
    to run; use with_stable_dt() to clamp a requested dt downward instead.
    """

    array_kind: str
    element_positions: tuple     # ((row, col), ...) on the physical grid
    grid_shape: tuple
    source_indices: tuple = None
    central_frequency: float = DEFAULT_FREQUENCY
    duration: float = None       # s; None = auto from grid crossing time
    dt: float = None             # s; None = auto CFL
    wavelet: str = "ricker"

    def __post_init__(self):
        if self.array_kind not in ("linear", "curvilinear"):
            raise ValidationError(f"unknown array kind {self.array_kind!r}")
        if self.wavelet != "ricker":
            raise ValidationError(f"unknown wavelet {self.wavelet!r}")
        if self.central_frequency <= 0:
            raise ValidationError("central_frequency must be positive")
        if self.duration is not None and self.duration <= 0:
            raise ValidationError("duration must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValidationError("dt must be positive")
        h, w = self.grid_shape
        for r, c in self.element_positions:
            if not (0 <= r < h and 0 <= c < w):
                raise ValidationError(f"element at ({r}, {c}) outside {h}x{w} grid")
        if self.source_indices is None:
            object.__setattr__(self, "source_indices", tuple(range(len(self.element_positions))))
        for s in self.source_indices:
            if not 0 <= s < len(self.element_positions):
                raise ValidationError(f"source index {s} out of range")

    @property
    def num_elements(self) -> int:
        return len(self.element_positions)

    @property
    def num_shots(self) -> int:
        return len(self.source_indices)

    def with_stable_dt(self, model: AcousticModel) -> "AcquisitionGeometry":
        """Clamp dt down to the model's stability bound (records effective dt)."""
        bound = cfl_dt(model)
        dt = bound if self.dt is None else min(self.dt, bound)
        return replace(self, dt=dt)


@dataclass
class ShotRecord:
    """Receiver traces: (num_shots, num_receivers, num_time_steps) pressure."""

    traces: np.ndarray
    dt: float
    geometry: AcquisitionGeometry

    def __post_init__(self):
        if self.traces.ndim != 3:
            raise ValidationError(f"traces must be 3D, got shape {self.traces.shape}")
        if not np.all(np.isfinite(self.traces)):
            raise ValidationError("traces contain non-finite samples")


@dataclass(frozen=True)
class WavefieldSnapshot:
    time_index: int
    field: np.ndarray            # padded computational grid


def cfl_dt(model: AcousticModel) -> float:
    """Largest stable time step for the model."""
    return CFL_FACTOR * model.grid_spacing / (float(model.speed.max()) * np.sqrt(2.0))


def ricker_wavelet(central_frequency: float, dt: float, num_steps: int) -> np.ndarray:
    """Ricker pulse (1 - 2 pi^2 f^2 t^2) exp(-pi^2 f^2 t^2), peak 1 at t0 = 1.5/f."""
    if central_frequency <= 0 or dt <= 0:
        raise ValidationError("frequency and dt must be positive")
    t = np.arange(num_steps) * dt - 1.5 / central_frequency
    arg = (np.pi * central_frequency * t) ** 2
    return (1.0 - 2.0 * arg) * np.exp(-arg)


def make_linear_array(num_elements: int, depth_row: int, grid_shape: tuple, **kwargs) -> AcquisitionGeometry:
    """Evenly spaced elements along one row; all elements emit and receive."""
    h, w = grid_shape
    if num_elements < 2:
        raise ValidationError("a linear array needs at least 2 elements")
    if not 0 <= depth_row < h:
        raise ValidationError(f"depth_row {depth_row} outside grid of height {h}")
    usable = w - 2 * ARRAY_MARGIN
    if usable < num_elements:
        raise ValidationError(f"{num_elements} elements do not fit in width {w}")
    cols = np.rint(np.linspace(ARRAY_MARGIN, w - 1 - ARRAY_MARGIN, num_elements)).astype(int)
    if len(np.unique(cols)) != num_elements:
        raise ValidationError(f"{num_elements} elements do not fit distinct cells in width {w}")
    positions = tuple((depth_row, int(c)) for c in cols)
    return AcquisitionGeometry(array_kind="linear", element_positions=positions, grid_shape=tuple(grid_shape), **kwargs)


def make_curvilinear_array(
    num_elements: int,
    radius: float,
    center: tuple,
    arc: float,
    grid_shape: tuple,
    **kwargs,
) -> AcquisitionGeometry:
    """Elements evenly spaced in angle on a circular arc.

    Angle 0 points along +col; angles increase toward +row. A full-circle
    arc (2 pi) spaces elements without duplicating the seam.
    """
    if num_elements < 2:
        raise ValidationError("a curvilinear array needs at least 2 elements")
    if not 0.0 < arc <= 2.0 * np.pi + 1e-12:
        raise ValidationError(f"arc must be in (0, 2*pi], got {arc}")
    full_circle = abs(arc - 2.0 * np.pi) < 1e-12
    angles = np.linspace(0.0, arc, num_elements, endpoint=not full_circle)
    cr, cc = center
    rows = np.rint(cr + radius * np.sin(angles)).astype(int)
    cols = np.rint(cc + radius * np.cos(angles)).astype(int)
    h, w = grid_shape
    for r, c in zip(rows, cols):
        if not (0 <= r < h and 0 <= c < w):
            raise ValidationError(f"arc element at ({r}, {c}) falls outside {h}x{w} grid")
    positions = tuple((int(r), int(c)) for r, c in zip(rows, cols))
    return AcquisitionGeometry(
        array_kind="curvilinear", element_positions=positions, grid_shape=tuple(grid_shape), **kwargs
    )


def _sponge_gamma(shape_padded: tuple, dx: float, c_max: float) -> np.ndarray:
    """Damping coefficient gamma (1/s) on the padded grid, cosine-tapered.

    Zero over the physical region, rising to SPONGE_STRENGTH * c_max / dx at
    the outer edge of the sponge.
    """
    hp, wp = shape_padded
    gamma_max = SPONGE_STRENGTH * c_max / dx

    def axis_profile(n):
        # depth into the sponge, measured from the physical-region edge
        idx = np.arange(n, dtype=np.float64)
        depth = np.maximum(PAD - idx, idx - (n - 1 - PAD))
        depth = np.clip(depth / SPONGE_CELLS, 0.0, 1.0)
        return 0.5 * (1.0 - np.cos(np.pi * depth))

    taper = np.maximum.outer(axis_profile(hp), axis_profile(wp))
    return gamma_max * taper


class _Propagator:
    """Shared state for forward/adjoint/Born runs on one model+geometry."""

    def __init__(self, model: AcousticModel, geometry: AcquisitionGeometry):
        if tuple(geometry.grid_shape) != model.shape:
            raise ValidationError(f"geometry grid {geometry.grid_shape} does not match model {model.shape}")
        self.model = model
        self.dx = model.grid_spacing
        bound = cfl_dt(model)
        if geometry.dt is None:
            self.dt = bound
        elif geometry.dt > bound * (1.0 + 1e-9):
            raise CflViolationError(
                f"dt={geometry.dt:.3e}s violates the stability bound {bound:.3e}s for this model"
            )
        else:
            self.dt = float(geometry.dt)

        h, w = model.shape
        if geometry.duration is None:
            # time for the slowest wave to cross the grid twice, plus the pulse
            crossing = max(h, w) * self.dx / float(model.speed.min())
            duration = 2.0 * crossing + 3.0 / geometry.central_frequency
        else:
            duration = geometry.duration
        self.nt = max(int(round(duration / self.dt)), 1)
        self.geometry = geometry
        self.wavelet_series = ricker_wavelet(geometry.central_frequency, self.dt, self.nt)

        # nominal sampling check at the median speed; badly undersampled
        # configurations (e.g. 10 MHz on a 0.5 mm grid) are accepted but
        # flagged
        wavelength = float(np.median(model.speed)) / geometry.central_frequency
        self.points_per_wavelength = wavelength / self.dx
        if self.points_per_wavelength < DISPERSION_POINTS_PER_WAVELENGTH * DISPERSION_WARN_FRACTION:
            warnings.warn(
                f"only {self.points_per_wavelength:.1f} grid points per wavelength at "
                f"{geometry.central_frequency:.3g} Hz; expect numerical dispersion "
                f"(recommended >= {DISPERSION_POINTS_PER_WAVELENGTH:g})",
                stacklevel=3,
            )

        speed_pad = np.pad(model.speed, PAD, mode="edge")
        gamma_dt = _sponge_gamma(speed_pad.shape, self.dx, float(model.speed.max())) * self.dt
        self.a = 1.0 / (1.0 + gamma_dt)
        self.c_damp = 1.0 - gamma_dt
        self.b = (self.dt * speed_pad) ** 2          # dt^2 / m
        self.ab = self.a * self.b
        self.inv_dx2 = 1.0 / self.dx**2
        self.shape_padded = speed_pad.shape

        self.cells = tuple((r + PAD, c + PAD) for r, c in geometry.element_positions)
        self.rec_rows = np.array([r for r, _ in self.cells])
        self.rec_cols = np.array([c for _, c in self.cells])

    def _step(self, cur: np.ndarray, prev: np.ndarray, source_field: np.ndarray | None = None) -> np.ndarray:
        """One leapfrog step; `source_field` is a full-grid source density."""
        s0, s1, s2 = _STENCIL
        lap = np.zeros_like(cur)
        lap[2:-2, 2:-2] = (
            2.0 * s0 * cur[2:-2, 2:-2]
            + s1 * (cur[1:-3, 2:-2] + cur[3:-1, 2:-2] + cur[2:-2, 1:-3] + cur[2:-2, 3:-1])
            + s2 * (cur[:-4, 2:-2] + cur[4:, 2:-2] + cur[2:-2, :-4] + cur[2:-2, 4:])
        ) * self.inv_dx2
        nxt = self.a * (2.0 * cur + self.b * lap - self.c_damp * prev)
        if source_field is not None:
            nxt += self.ab * source_field
        return nxt

    def run(
        self,
        shot: int,
        store_history: bool = False,
        record_wavefield: bool = False,
        snapshot_stride: int = 1,
        source_scale: float = 1.0,
        born_source: np.ndarray | None = None,
    ):
        """Propagate one shot.

        Returns (traces, snapshots, history): traces is (num_receivers, nt),
        history (if requested) holds the padded field at every step index
        0..nt, and snapshots is the decimated WavefieldSnapshot list.

        With `born_source` set, the point source is replaced by the given
        full-grid time-dependent source density of shape (nt, *padded).
        """
        if not 0 <= shot < self.geometry.num_shots:
            raise ValidationError(f"shot index {shot} out of range")
        src_cell = self.cells[self.geometry.source_indices[shot]]
        nt = self.nt
        traces = np.zeros((len(self.cells), nt))
        cur = np.zeros(self.shape_padded)
        prev = np.zeros(self.shape_padded)
        history = np.zeros((nt + 1,) + self.shape_padded) if store_history else None
        snapshots = [] if record_wavefield else None
        ceiling = BLOWUP_FACTOR * max(abs(source_scale), 1e-30)
        src_gain = self.ab[src_cell] * self.inv_dx2 * source_scale

        for t in range(nt):
            nxt = self._step(cur, prev, born_source[t] if born_source is not None else None)
            if born_source is None:
                nxt[src_cell] += src_gain * self.wavelet_series[t]
            traces[:, t] = nxt[self.rec_rows, self.rec_cols]
            prev, cur = cur, nxt
            if store_history:
                history[t + 1] = cur
            if record_wavefield and t % snapshot_stride == 0:
                snapshots.append(WavefieldSnapshot(time_index=t + 1, field=cur.copy()))
            if t % 50 == 49 or t == nt - 1:
                peak = float(np.abs(cur).max())
                if not np.isfinite(peak):
                    raise NumericalError(f"non-finite wavefield at step {t + 1}")
                if born_source is None and peak > ceiling:
                    raise NumericalError(f"wavefield blow-up at step {t + 1}: |u|={peak:.3e}")
        return traces, snapshots, history

    def run_adjoint(self, residual: np.ndarray, history: np.ndarray) -> np.ndarray:
        """Backpropagate a data residual and accumulate the misfit gradient.

        `residual` is (num_receivers, nt) in trace order; `history` is the
        stored forward field (nt+1 frames). Returns d(misfit)/d(slowness^2)
        on the padded grid. The backward recursion reuses the forward step
        kernel, which makes the pair an exact transpose of the linearized
        forward map.
        """
        nt = self.nt
        grad = np.zeros(self.shape_padded)
        lam_next = np.zeros(self.shape_padded)   # multiplier at k+1
        lam_cur = np.zeros(self.shape_padded)    # multiplier at k
        inv_dt2 = 1.0 / self.dt**2
        for k in range(nt, 0, -1):
            lam_prev = self._step(lam_cur, lam_next)
            np.add.at(
                lam_prev,
                (self.rec_rows, self.rec_cols),
                self.ab[self.rec_rows, self.rec_cols] * residual[:, k - 1],
            )
            # pair multiplier k-1 with the damping-aware second time
            # difference of u at the same index
            u_next = history[k]
            u_cur = history[k - 1]
            u_prev = history[k - 2] if k >= 2 else np.zeros(self.shape_padded)
            u_tt = ((2.0 - self.c_damp) * u_next - 2.0 * u_cur + self.c_damp * u_prev) * inv_dt2
            grad -= lam_prev * u_tt
            lam_next, lam_cur = lam_cur, lam_prev
        return grad

    def born_traces(self, dm_padded: np.ndarray, history: np.ndarray) -> np.ndarray:
        """Linearized (Born) scattering: traces of the field perturbation
        caused by a slowness-squared perturbation, given the stored
        background field history."""
        nt = self.nt
        inv_dt2 = 1.0 / self.dt**2
        src = np.zeros((nt,) + self.shape_padded)
        for t in range(nt):
            u_next = history[t + 1]
            u_cur = history[t]
            u_prev = history[t - 1] if t >= 1 else np.zeros(self.shape_padded)
            u_tt = ((2.0 - self.c_damp) * u_next - 2.0 * u_cur + self.c_damp * u_prev) * inv_dt2
            src[t] = -dm_padded * u_tt
        traces, _, _ = self.run(shot=0, born_source=src)
        return traces

    def pad_model_grid(self, grid: np.ndarray, fill: float = 0.0) -> np.ndarray:
        return np.pad(grid, PAD, mode="constant", constant_values=fill)

    def crop_to_model(self, padded: np.ndarray) -> np.ndarray:
        return padded[PAD:-PAD, PAD:-PAD]


def forward(
    model: AcousticModel,
    geometry: AcquisitionGeometry,
    shot: int = 0,
    record_wavefield: bool = False,
    snapshot_stride: int = 1,
    source_scale: float = 1.0,
):
    """Simulate one shot; returns (traces, snapshots or None).

    traces is (num_receivers, num_time_steps). Refuses to run when the
    geometry's explicit dt violates the stability bound.
    """
    prop = _Propagator(model, geometry)
    traces, snapshots, _ = prop.run(
        shot, record_wavefield=record_wavefield, snapshot_stride=snapshot_stride, source_scale=source_scale
    )
    return traces, snapshots


def simulate_all_shots(model: AcousticModel, geometry: AcquisitionGeometry) -> ShotRecord:
    """One-emitter-at-a-time protocol: shot s fires element s, all record."""
    prop = _Propagator(model, geometry)
    all_traces = np.zeros((geometry.num_shots, geometry.num_elements, prop.nt))
    for s in range(geometry.num_shots):
        traces, _, _ = prop.run(s)
        all_traces[s] = traces
    peak = float(np.abs(all_traces).max())
    if peak > BLOWUP_FACTOR:
        raise NumericalError(f"trace amplitude {peak:.3e} exceeds the stability ceiling")
    resolved = replace(geometry, dt=prop.dt, duration=prop.nt * prop.dt)
    return ShotRecord(traces=all_traces, dt=prop.dt, geometry=resolved)
