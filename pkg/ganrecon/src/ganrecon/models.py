"""Generator and discriminator: a small U-Net (4 down / 4 up, base width 32)
and a patch discriminator, sized for 64x64 grayscale pairs."""

from __future__ import annotations

import torch
import torch.nn as nn


def _down(cin, cout, normalize=True):
    layers = [nn.Conv2d(cin, cout, 4, stride=2, padding=1, bias=not normalize)]
    if normalize:
        layers.append(nn.InstanceNorm2d(cout, affine=True))
    layers.append(nn.LeakyReLU(0.2, inplace=True))
    return nn.Sequential(*layers)


def _up(cin, cout):
    return nn.Sequential(
        nn.ConvTranspose2d(cin, cout, 4, stride=2, padding=1, bias=False),
        nn.InstanceNorm2d(cout, affine=True),
        nn.ReLU(inplace=True),
    )


class UNetGenerator(nn.Module):
    """4 encoder / 4 decoder levels with skip connections; sigmoid output."""

    def __init__(self, base: int = 32):
        super().__init__()
        self.enc1 = _down(1, base, normalize=False)
        self.enc2 = _down(base, base * 2)
        self.enc3 = _down(base * 2, base * 4)
        self.enc4 = _down(base * 4, base * 8)
        self.dec4 = _up(base * 8, base * 4)
        self.dec3 = _up(base * 8, base * 2)
        self.dec2 = _up(base * 4, base)
        self.dec1 = nn.Sequential(
            nn.ConvTranspose2d(base * 2, base, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(base, 1, 3, padding=1),
            nn.Sigmoid(),
        )

    def forward(self, x):
        e1 = self.enc1(x)
        e2 = self.enc2(e1)
        e3 = self.enc3(e2)
        e4 = self.enc4(e3)
        d4 = self.dec4(e4)
        d3 = self.dec3(torch.cat([d4, e3], dim=1))
        d2 = self.dec2(torch.cat([d3, e2], dim=1))
        return self.dec1(torch.cat([d2, e1], dim=1))


class PatchDiscriminator(nn.Module):
    """Conditional patch critic over (input, candidate) channel pairs;
    outputs a logit map whose cells see ~70x70 patches at full scale."""

    def __init__(self, base: int = 32):
        super().__init__()
        self.net = nn.Sequential(
            _down(2, base, normalize=False),
            _down(base, base * 2),
            _down(base * 2, base * 4),
            nn.Conv2d(base * 4, base * 8, 4, stride=1, padding=1, bias=False),
            nn.InstanceNorm2d(base * 8, affine=True),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base * 8, 1, 4, stride=1, padding=1),
        )

    def forward(self, condition, candidate):
        return self.net(torch.cat([condition, candidate], dim=1))
