"""X-ray attenuation and acoustic tissue properties.

Maps pixel intensities to Hounsfield units, composes linear attenuation
coefficients from elemental mass-attenuation tables, interpolates
speed-of-sound values from HU anchors, and applies depth-dependent
exponential attenuation to images.

Tissue data is configuration, not ground truth: the bundled 5-entry table
(air, fat, water, glandular, tumor-like) carries plausible values for a
mammographic beam but any table matching the JSON schema can be supplied:

    {
      "water_mu_1_cm": <float>,
      "tissues": [
        {"name": ..., "density_g_cm3": ..., "hu": ..., "sound_speed_m_s": ...,
         "elements": [{"symbol": ..., "w": ..., "mu_over_rho_cm2_g": ...}, ...]},
        ...
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .imaging import require_grid

WEIGHT_TOLERANCE = 1e-3
SOUND_SPEED_BAND = (300.0, 4000.0)


@dataclass(frozen=True)
class ElementFraction:
    symbol: str
    w: float                 # mass fraction
    mu_over_rho: float       # mass attenuation coefficient, cm^2/g


@dataclass(frozen=True)
class TissueEntry:
    name: str
    elements: tuple
    density: float           # g/cm^3
    hu_anchor: float
    sound_speed_anchor: float  # m/s at body temperature

    def __post_init__(self):
        total = sum(e.w for e in self.elements)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValidationError(f"tissue {self.name!r}: element weights sum to {total}, not 1")
        if self.density <= 0:
            raise ValidationError(f"tissue {self.name!r}: density must be positive")
        lo, hi = SOUND_SPEED_BAND
        if not (lo <= self.sound_speed_anchor <= hi):
            raise ValidationError(
                f"tissue {self.name!r}: sound speed {self.sound_speed_anchor} outside sanity band {SOUND_SPEED_BAND}"
            )


@dataclass(frozen=True)
class TissueTable:
    entries: tuple
    water_mu: float          # linear attenuation of water, 1/cm

    def __post_init__(self):
        if self.water_mu <= 0:
            raise ValidationError("water_mu must be positive")
        hus = [e.hu_anchor for e in self.entries]
        if any(b <= a for a, b in zip(hus, hus[1:])):
            raise ValidationError("hu anchors must be strictly increasing across table entries")
        if not any(e.name == "water" and e.hu_anchor == 0.0 for e in self.entries):
            raise ValidationError("tissue table needs a 'water' entry anchored at 0 HU")

    @property
    def hu_anchors(self) -> np.ndarray:
        return np.array([e.hu_anchor for e in self.entries], dtype=np.float64)

    @property
    def speed_anchors(self) -> np.ndarray:
        return np.array([e.sound_speed_anchor for e in self.entries], dtype=np.float64)


@dataclass(frozen=True)
class AttenuationParams:
    """Depth decay exp(-alpha_ref * d); depth grows down the rows."""

    alpha_ref: float         # 1/m
    pixel_size: float        # m per pixel

    def __post_init__(self):
        if self.alpha_ref < 0:
            raise ValidationError("alpha_ref must be non-negative")
        if self.pixel_size <= 0:
            raise ValidationError("pixel_size must be positive")


def _parse_table(doc: dict) -> TissueTable:
    try:
        entries = []
        for row in doc["tissues"]:
            elements = tuple(
                ElementFraction(e["symbol"], float(e["w"]), float(e["mu_over_rho_cm2_g"]))
                for e in row["elements"]
            )
            entries.append(
                TissueEntry(
                    name=row["name"],
                    elements=elements,
                    density=float(row["density_g_cm3"]),
                    hu_anchor=float(row["hu"]),
                    sound_speed_anchor=float(row["sound_speed_m_s"]),
                )
            )
        return TissueTable(entries=tuple(entries), water_mu=float(doc["water_mu_1_cm"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed tissue table: missing or bad field {exc}") from exc


def load_tissue_table(path) -> TissueTable:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such tissue table: {path}")
    with open(path) as fh:
        return _parse_table(json.load(fh))


def default_tissue_table() -> TissueTable:
    """The bundled air/fat/water/glandular/tumor table."""
    text = resources.files("wavesono").joinpath("data/default_tissues.json").read_text()
    return _parse_table(json.loads(text))


def linear_attenuation(entry: TissueEntry) -> float:
    """Total linear attenuation of a tissue, 1/cm.

    Density times the mass-fraction-weighted sum of elemental mass
    attenuation coefficients.
    """
    total = sum(e.w for e in entry.elements)
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ValidationError(f"tissue {entry.name!r}: element weights not normalized")
    return entry.density * sum(e.w * e.mu_over_rho for e in entry.elements)


def hounsfield(mu_x: float, mu_water: float) -> float:
    """Hounsfield units: 1000 * (mu_x - mu_water) / mu_water."""
    if mu_water <= 0:
        raise ValidationError("mu_water must be positive")
    return 1000.0 * (mu_x - mu_water) / mu_water


def intensity_to_hu(grid, hu_min: float = -1000.0, hu_max: float = 1000.0) -> np.ndarray:
    """Affine map of [0,1] intensities onto [hu_min, hu_max]."""
    if hu_max <= hu_min:
        raise ValidationError(f"inverted HU bounds: ({hu_min}, {hu_max})")
    grid = require_grid(grid)
    return hu_min + grid * (hu_max - hu_min)


def hu_to_sound_speed(hu_grid, table: TissueTable) -> np.ndarray:
    """Piecewise-linear HU -> speed map, clamped to endpoint speeds."""
    if len(table.entries) < 2:
        raise ValidationError("tissue table needs at least 2 entries to interpolate")
    hu_grid = require_grid(hu_grid, "hu_grid")
    return np.interp(hu_grid, table.hu_anchors, table.speed_anchors)


def apply_attenuation(grid, params: AttenuationParams) -> np.ndarray:
    """Scale row r by exp(-alpha_ref * r * pixel_size)."""
    grid = require_grid(grid)
    rows = np.arange(grid.shape[0], dtype=np.float64)
    decay = np.exp(-params.alpha_ref * rows * params.pixel_size)
    return grid * decay[:, None]
