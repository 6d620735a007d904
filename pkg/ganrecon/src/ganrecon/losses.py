"""Training losses, numerically matched to the simulation toolkit's
deterministic definitions (L1, 4-neighbor Laplacian with edge replication,
single-level orthonormal Haar), plus the adversarial terms and a frozen
random-feature perceptual loss.

The match is part of the component contract: on shared test vectors these
functions agree with the pipeline's `losses` subcommand to better than 1e-5.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

LOG_EPS = 1e-7

_LAPLACIAN_KERNEL = torch.tensor([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]).view(1, 1, 3, 3)


def l1_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return torch.mean(torch.abs(a - b))


def laplacian_filter(x: torch.Tensor) -> torch.Tensor:
    """3x3 4-neighbor Laplacian with edge-replicated padding; x is NCHW."""
    kernel = _LAPLACIAN_KERNEL.to(x.dtype).to(x.device)
    padded = F.pad(x, (1, 1, 1, 1), mode="replicate")
    return F.conv2d(padded, kernel)


def laplacian_loss(recon: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    return l1_loss(laplacian_filter(recon), laplacian_filter(truth))


def haar2(x: torch.Tensor):
    """Single-level orthonormal Haar split of NCHW into (LL, LH, HL, HH)."""
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a - b + c - d) / 2.0
    hl = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return ll, lh, hl, hh


def wavelet_loss(recon: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    bands_r = haar2(recon)
    bands_t = haar2(truth)
    losses = [l1_loss(r, t) for r, t in zip(bands_r, bands_t)]
    return torch.stack(losses).mean()


def adversarial_value(d_real: torch.Tensor, d_fake: torch.Tensor, eps: float = LOG_EPS) -> torch.Tensor:
    """Min-max game value E[log D(x)] + E[log(1 - D(G(z)))] on probabilities."""
    d_real = torch.clamp(d_real, eps, 1.0 - eps)
    d_fake = torch.clamp(d_fake, eps, 1.0 - eps)
    return torch.mean(torch.log(d_real)) + torch.mean(torch.log(1.0 - d_fake))


class RandomFeaturePerceptual(torch.nn.Module):
    """Perceptual distance in the feature space of a frozen, seeded,
    randomly initialized conv stack.

    Pretrained backbones are deliberately avoided (no download at train
    time); random conv features still expose multi-scale structure.
    """

    def __init__(self, seed: int = 0, base: int = 16):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        ch = 1
        for k in range(3):
            conv = torch.nn.Conv2d(ch, base * 2**k, 3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.2)
                conv.bias.zero_()
            layers.append(conv)
            ch = base * 2**k
        self.stages = torch.nn.ModuleList(layers)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, recon: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
        fr, ft = recon, truth
        total = recon.new_zeros(())
        for stage in self.stages:
            fr = torch.relu(stage(fr))
            ft = torch.relu(stage(ft))
            total = total + torch.mean(torch.abs(fr - ft))
        return total / len(self.stages)
