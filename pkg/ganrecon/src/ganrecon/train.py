"""Adversarial training loop.

Alternates discriminator and generator steps on paired batches. The
generator objective is  w_p * slot + w_l1 * L1 + w_adv * adversarial  with a
configurable perceptual-slot loss. Runs are fully seed-reproducible on CPU
(deterministic kernels, single thread, seeded shuffling); loss curves are
byte-identical across reruns.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from . import __version__
from .data import PairedDataset
from .losses import RandomFeaturePerceptual, adversarial_value, l1_loss, laplacian_loss, wavelet_loss
from .models import PatchDiscriminator, UNetGenerator

SLOT_CHOICES = ("none", "perceptual", "laplacian", "wavelet")


@dataclass
class TrainConfig:
    image_size: int = 64
    epochs: int = 20
    batch_size: int = 8
    learning_rate: float = 2e-4
    adam_betas: tuple = (0.5, 0.999)
    weight_perceptual: float = 0.0
    weight_l1: float = 10.0
    weight_adversarial: float = 1.0
    perceptual_slot: str = "none"
    seed: int = 0
    base_width: int = 32

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if min(self.weight_perceptual, self.weight_l1, self.weight_adversarial) < 0:
            raise ValueError("loss weights must be >= 0")
        if self.perceptual_slot not in SLOT_CHOICES:
            raise ValueError(f"perceptual_slot must be one of {SLOT_CHOICES}")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        weights = doc.pop("weights", None)
        cfg = dict(doc)
        if weights is not None:
            cfg["weight_perceptual"] = weights.get("perceptual", 0.0)
            cfg["weight_l1"] = weights.get("l1", 10.0)
            cfg["weight_adversarial"] = weights.get("adversarial", 1.0)
        cfg.pop("data", None)
        cfg.pop("output_dir", None)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown training config fields: {sorted(unknown)}")
        if "adam_betas" in cfg:
            cfg["adam_betas"] = tuple(cfg["adam_betas"])
        return cls(**cfg)


@dataclass
class EpochStats:
    epoch: int
    d_loss: float
    g_total: float
    g_l1: float
    g_adv: float
    g_slot: float
    game_value: float


def _setup_determinism(seed: int):
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)


def _slot_fn(config: TrainConfig):
    if config.perceptual_slot == "laplacian":
        return laplacian_loss
    if config.perceptual_slot == "wavelet":
        return wavelet_loss
    if config.perceptual_slot == "perceptual":
        net = RandomFeaturePerceptual(seed=config.seed)
        return net
    return None


def train(config: TrainConfig, dataset: PairedDataset, out_dir) -> tuple:
    """Train and save artifacts; returns (checkpoint path, per-epoch stats).

    Writes checkpoint.pt (atomically) and loss_curves.csv under out_dir.
    Aborts with RuntimeError at the first non-finite loss.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, w = dataset.image_shape
    if (h, w) != (config.image_size, config.image_size):
        raise ValueError(f"dataset images are {h}x{w}, config expects {config.image_size}")

    _setup_determinism(config.seed)
    gen = UNetGenerator(base=config.base_width)
    disc = PatchDiscriminator(base=config.base_width)
    opt_g = torch.optim.Adam(gen.parameters(), lr=config.learning_rate, betas=config.adam_betas)
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.learning_rate, betas=config.adam_betas)
    bce = torch.nn.BCEWithLogitsLoss()
    slot = _slot_fn(config)

    loader = DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(config.seed),
        num_workers=0,
    )

    history = []
    for epoch in range(config.epochs):
        sums = np.zeros(6)
        batches = 0
        for x, y in loader:
            fake = gen(x)

            # discriminator step
            opt_d.zero_grad(set_to_none=True)
            logits_real = disc(x, y)
            logits_fake = disc(x, fake.detach())
            d_loss = 0.5 * (
                bce(logits_real, torch.ones_like(logits_real))
                + bce(logits_fake, torch.zeros_like(logits_fake))
            )
            d_loss.backward()
            opt_d.step()

            # generator step (non-saturating adversarial term)
            opt_g.zero_grad(set_to_none=True)
            logits_fake = disc(x, fake)
            g_adv = bce(logits_fake, torch.ones_like(logits_fake))
            g_l1 = l1_loss(fake, y)
            g_slot = slot(fake, y) if slot is not None else fake.new_zeros(())
            g_total = (
                config.weight_perceptual * g_slot
                + config.weight_l1 * g_l1
                + config.weight_adversarial * g_adv
            )
            g_total.backward()
            opt_g.step()

            with torch.no_grad():
                game = adversarial_value(torch.sigmoid(logits_real), torch.sigmoid(logits_fake))
            values = [
                d_loss.item(),
                g_total.item(),
                g_l1.item(),
                g_adv.item(),
                float(g_slot.detach()),
                game.item(),
            ]
            if not all(np.isfinite(values)):
                raise RuntimeError(f"non-finite loss at epoch {epoch}: {values}")
            sums += values
            batches += 1
        means = sums / batches
        history.append(EpochStats(epoch, *means))

    # atomic checkpoint write
    ckpt_path = out_dir / "checkpoint.pt"
    tmp = ckpt_path.with_suffix(".pt.tmp")
    torch.save(
        {
            "version": __version__,
            "config": asdict(config),
            "generator": gen.state_dict(),
            "discriminator": disc.state_dict(),
        },
        tmp,
    )
    tmp.replace(ckpt_path)

    csv_path = out_dir / "loss_curves.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("epoch,d_loss,g_total,g_l1,g_adv,g_slot,game_value\n")
        for s in history:
            fh.write(
                f"{s.epoch},{s.d_loss!r},{s.g_total!r},{s.g_l1!r},{s.g_adv!r},{s.g_slot!r},{s.game_value!r}\n"
            )
    return ckpt_path, history


def load_generator(checkpoint_path) -> tuple:
    """Rebuild the generator (eval mode) and its TrainConfig from a checkpoint."""
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=True)
    config = TrainConfig(**{**payload["config"], "adam_betas": tuple(payload["config"]["adam_betas"])})
    gen = UNetGenerator(base=config.base_width)
    gen.load_state_dict(payload["generator"])
    gen.eval()
    return gen, config


@torch.no_grad()
def infer(checkpoint_path, image: np.ndarray) -> np.ndarray:
    """Single deterministic forward pass; returns an image in [0,1]."""
    gen, config = load_generator(checkpoint_path)
    h, w = image.shape
    if (h, w) != (config.image_size, config.image_size):
        raise ValueError(f"image is {h}x{w}, model expects {config.image_size}")
    x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))[None, None]
    out = gen(x)[0, 0].numpy().astype(np.float64)
    return out
