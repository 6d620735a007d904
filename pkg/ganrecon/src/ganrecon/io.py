"""Grayscale image file I/O shared with the simulation pipeline.

Understands the same wire formats the pipeline emits: 8-bit grayscale PNG,
binary PGM (P5, maxval 255), and the lossless f32-raw format (magic
"WSG1\\n", u32 LE height, u32 LE width, little-endian float32 payload,
row-major).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

F32_MAGIC = b"WSG1\n"

IMAGE_SUFFIXES = (".png", ".pgm", ".f32", ".raw")


def load_image(path) -> np.ndarray:
    """Read a grayscale image as float64; 8-bit formats map to [0,1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    suffix = path.suffix.lower()
    if suffix in (".f32", ".raw"):
        data = path.read_bytes()
        if data[: len(F32_MAGIC)] != F32_MAGIC:
            raise ValueError(f"bad f32-raw magic in {path}")
        h, w = struct.unpack("<II", data[len(F32_MAGIC) : len(F32_MAGIC) + 8])
        payload = data[len(F32_MAGIC) + 8 :]
        if len(payload) != h * w * 4:
            raise ValueError(f"f32-raw payload size mismatch in {path}")
        return np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)
    if suffix == ".pgm":
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValueError(f"expected 8-bit grayscale image, got mode {img.mode!r} in {path}")
        return np.asarray(img, dtype=np.float64) / 255.0


def save_image(grid: np.ndarray, path) -> None:
    """Write float image; .f32 keeps full precision, others quantize to 8 bits."""
    path = Path(path)
    grid = np.asarray(grid, dtype=np.float64)
    if path.suffix.lower() in (".f32", ".raw"):
        h, w = grid.shape
        path.write_bytes(F32_MAGIC + struct.pack("<II", h, w) + grid.astype("<f4").tobytes())
        return
    q = np.floor(np.clip(grid, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(q, mode="L").save(path)
