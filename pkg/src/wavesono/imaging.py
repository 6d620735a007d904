"""Image grids, grayscale file I/O, and full-reference quality metrics.

An image grid is a plain 2D float64 numpy array, shape (height, width),
row-major. Intensity images live in [0, 1]; speed-of-sound maps are in m/s.
The metrics take the dynamic range L as a parameter (default 1.0).

Supported file formats:
  pgm8      binary PGM (P5, maxval 255)
  png8-gray 8-bit grayscale PNG
  f32-raw   lossless raw float format: ASCII magic "WSG1\\n", then height
            and width as 4-byte little-endian unsigned ints, then
            height*width little-endian IEEE-754 binary32 values row-major
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ValidationError

F32_MAGIC = b"WSG1\n"
MAX_SIDE = 2**16

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

_FORMATS = ("pgm8", "png8-gray", "f32-raw")
_SUFFIX_FORMATS = {".pgm": "pgm8", ".png": "png8-gray", ".f32": "f32-raw", ".raw": "f32-raw"}


def require_grid(a, name: str = "image") -> np.ndarray:
    """Validate and return `a` as a finite 2D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf values")
    return arr


def require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"image dimensions differ: {a.shape} vs {b.shape}")


def _resolve_format(path, fmt):
    if fmt is None:
        fmt = _SUFFIX_FORMATS.get(Path(path).suffix.lower())
        if fmt is None:
            raise ValidationError(f"cannot infer image format from {path!r}")
    if fmt not in _FORMATS:
        raise ValidationError(f"unknown image format {fmt!r}; expected one of {_FORMATS}")
    return fmt


def quantize8(grid: np.ndarray) -> np.ndarray:
    """Clamp to [0,1] and quantize to uint8, rounding half up."""
    g = np.clip(require_grid(grid), 0.0, 1.0)
    return np.floor(g * 255.0 + 0.5).astype(np.uint8)


def _check_dims(height: int, width: int) -> None:
    if not (0 < height <= MAX_SIDE and 0 < width <= MAX_SIDE):
        raise ValidationError(f"image dimensions {height}x{width} out of range (max {MAX_SIDE} per side)")


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, then a single whitespace byte before the raster
    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ValidationError(f"truncated PGM header in {path}")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    i += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise ValidationError(f"not a binary PGM (P5) file: {path}")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ValidationError(f"malformed PGM header in {path}") from exc
    if maxval != 255:
        raise ValidationError(f"unsupported PGM maxval {maxval} (only 255)")
    _check_dims(height, width)
    raster = data[i : i + height * width]
    if len(raster) != height * width:
        raise ValidationError(f"PGM raster truncated in {path}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64) / 255.0


def _read_f32(path: Path) -> np.ndarray:
    data = path.read_bytes()
    head = len(F32_MAGIC) + 8
    if len(data) < head or data[: len(F32_MAGIC)] != F32_MAGIC:
        raise ValidationError(f"bad f32-raw magic in {path}")
    height, width = struct.unpack("<II", data[len(F32_MAGIC) : head])
    _check_dims(height, width)
    payload = data[head:]
    if len(payload) != height * width * 4:
        raise ValidationError(f"f32-raw payload size mismatch in {path}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return arr.astype(np.float64)


def load_image(path, fmt: str | None = None) -> np.ndarray:
    """Load a grayscale image as a 2D float64 array.

    8-bit formats are mapped to [0,1] via v/255; f32-raw is read verbatim.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such image file: {path}")
    fmt = _resolve_format(path, fmt)
    if fmt == "pgm8":
        return _read_pgm(path)
    if fmt == "f32-raw":
        return _read_f32(path)
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise ValidationError(f"cannot decode PNG {path}: {exc}") from exc
    if img.mode != "L":
        raise ValidationError(f"expected 8-bit grayscale PNG, got mode {img.mode!r} in {path}")
    arr = np.asarray(img, dtype=np.float64) / 255.0
    _check_dims(*arr.shape)
    return arr


def save_image(grid: np.ndarray, path, fmt: str | None = None) -> None:
    """Write a grid to disk. 8-bit formats clamp to [0,1] and quantize."""
    grid = require_grid(grid)
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    _check_dims(*grid.shape)
    try:
        if fmt == "pgm8":
            q = quantize8(grid)
            header = f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii")
            path.write_bytes(header + q.tobytes())
        elif fmt == "png8-gray":
            Image.fromarray(quantize8(grid), mode="L").save(path, format="PNG")
        else:
            h, w = grid.shape
            payload = grid.astype("<f4").tobytes()
            path.write_bytes(F32_MAGIC + struct.pack("<II", h, w) + payload)
    except OSError as exc:
        raise ValidationError(f"cannot write image to {path}: {exc}") from exc


def mse(a, b) -> float:
    """Mean squared error over pixels."""
    a = require_grid(a, "a")
    b = require_grid(b, "b")
    require_same_shape(a, b)
    d = a - b
    return float(np.mean(d * d))


def psnr(a, b, dynamic_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if dynamic_range <= 0:
        raise ValidationError("dynamic_range must be positive")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range**2 / err)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 2D Gaussian weighting window."""
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g1 = np.exp(-0.5 * (x / sigma) ** 2)
    k = np.outer(g1, g1)
    return k / k.sum()


def ssim(a, b, dynamic_range: float = 1.0) -> float:
    """Mean structural similarity over sliding Gaussian-weighted windows.

    Uses an 11x11 window with sigma 1.5 and stability constants
    C1=(0.01 L)^2, C2=(0.03 L)^2, averaged over all fully-contained window
    positions. Result is in [-1, 1]; identical images give exactly 1.
    """
    if dynamic_range <= 0:
        raise ValidationError("dynamic_range must be positive")
    a = require_grid(a, "a")
    b = require_grid(b, "b")
    require_same_shape(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise ValidationError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window: {a.shape}")
    k = gaussian_window()
    half = SSIM_WINDOW // 2
    crop = (slice(half, -half), slice(half, -half))

    def smooth(x):
        return ndimage.correlate(x, k, mode="constant")[crop]

    mu_a = smooth(a)
    mu_b = smooth(b)
    e_aa = smooth(a * a)
    e_bb = smooth(b * b)
    e_ab = smooth(a * b)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b

    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    value = float(np.mean(num / den))
    return float(np.clip(value, -1.0, 1.0))


def metric_report(a, b, dynamic_range: float = 1.0) -> dict:
    """MSE/PSNR/SSIM triple for an image pair."""
    return {
        "mse": mse(a, b),
        "psnr": psnr(a, b, dynamic_range),
        "ssim": ssim(a, b, dynamic_range),
    }
