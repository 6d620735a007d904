"""Paired datasets built from pipeline output files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

from .io import IMAGE_SUFFIXES, load_image


class PairedDataset(Dataset):
    """(input image, target image) pairs from files; all pairs same dims."""

    def __init__(self, pairs):
        self.pairs = [(Path(a), Path(b)) for a, b in pairs]
        if not self.pairs:
            raise ValueError("paired dataset is empty")
        shapes = set()
        self._cache = []
        for a, b in self.pairs:
            x = load_image(a)
            y = load_image(b)
            shapes.add(x.shape)
            shapes.add(y.shape)
            self._cache.append((x, y))
        if len(shapes) != 1:
            raise ValueError(f"pairs have mismatched dimensions: {sorted(shapes)}")
        self.image_shape = shapes.pop()

    @classmethod
    def from_directories(cls, inputs_dir, targets_dir):
        """Match input and target files positionally by sorted name."""
        ins = sorted(p for p in Path(inputs_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        tgts = sorted(p for p in Path(targets_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if len(ins) != len(tgts):
            raise ValueError(f"{len(ins)} inputs vs {len(tgts)} targets")
        return cls(list(zip(ins, tgts)))

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, idx):
        x, y = self._cache[idx]
        return (
            torch.from_numpy(np.ascontiguousarray(x, dtype=np.float32)).unsqueeze(0),
            torch.from_numpy(np.ascontiguousarray(y, dtype=np.float32)).unsqueeze(0),
        )
