"""Compact encoder-decoder networks for image-to-grid regression.

All nets share one U-Net skeleton (GroupNorm + SiLU, nearest-neighbor
upsampling) and differ in depth, width, and bottleneck: a plain variant,
one with a dilated-convolution bottleneck, one with an extra strided
context block for a wider receptive field, and a slim squeeze-excitation
variant for elevation regression.  Channel widths cap at 128 — these run
on a single CPU core.
"""

from __future__ import annotations

import torch
from torch import nn

from .errors import InvalidArgumentError

CHANNEL_CAP = 128


def _gn(channels: int) -> nn.GroupNorm:
    for groups in (8, 4, 2, 1):
        if channels % groups == 0:
            return nn.GroupNorm(groups, channels)
    return nn.GroupNorm(1, channels)


class ConvBlock(nn.Module):
    """conv3x3 -> GN -> SiLU, twice."""

    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, padding=1),
            _gn(out_ch),
            nn.SiLU(),
            nn.Conv2d(out_ch, out_ch, 3, padding=1),
            _gn(out_ch),
            nn.SiLU(),
        )

    def forward(self, x):
        return self.body(x)


class SqueezeExcite(nn.Module):
    """Channel attention: global-average pool -> bottleneck MLP -> sigmoid gate."""

    def __init__(self, channels: int, reduction: int = 4):
        super().__init__()
        hidden = max(channels // reduction, 4)
        self.gate = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(channels, hidden, 1),
            nn.SiLU(),
            nn.Conv2d(hidden, channels, 1),
            nn.Sigmoid(),
        )

    def forward(self, x):
        return x * self.gate(x)


class DilatedBottleneck(nn.Module):
    """Residual stack of dilated 3x3 convolutions (dilations 2 and 4)."""

    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=2, dilation=2),
            _gn(channels),
            nn.SiLU(),
            nn.Conv2d(channels, channels, 3, padding=4, dilation=4),
            _gn(channels),
            nn.SiLU(),
        )

    def forward(self, x):
        return x + self.body(x)


class StridedContext(nn.Module):
    """Residual context block: stride-2 downsample, convolve, upsample back."""

    def __init__(self, channels: int):
        super().__init__()
        self.down = nn.Sequential(
            nn.Conv2d(channels, channels, 3, stride=2, padding=1),
            _gn(channels),
            nn.SiLU(),
        )
        self.mid = ConvBlock(channels, channels)
        self.up = nn.Upsample(scale_factor=2, mode="nearest")
        self.fuse = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        y = self.up(self.mid(self.down(x)))
        return x + self.fuse(y)


class GridUNet(nn.Module):
    """U-Net with configurable depth/width and bottleneck style."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int = 1,
        base: int = 16,
        depth: int = 4,
        bottleneck: str = "plain",
        squeeze_excite: bool = False,
    ):
        super().__init__()
        if depth < 1:
            raise InvalidArgumentError(f"depth must be >= 1, got {depth}")
        widths = [min(base * 2**i, CHANNEL_CAP) for i in range(depth + 1)]

        self.enc = nn.ModuleList()
        self.att = nn.ModuleList()
        ch = in_channels
        for w in widths[:-1]:
            self.enc.append(ConvBlock(ch, w))
            self.att.append(SqueezeExcite(w) if squeeze_excite else nn.Identity())
            ch = w
        self.pool = nn.MaxPool2d(2)

        mid = widths[-1]
        core = [ConvBlock(ch, mid)]
        if bottleneck == "dilated":
            core.append(DilatedBottleneck(mid))
        elif bottleneck == "context":
            core.append(StridedContext(mid))
        elif bottleneck != "plain":
            raise InvalidArgumentError(f"unknown bottleneck {bottleneck!r}")
        self.mid = nn.Sequential(*core)

        self.up = nn.ModuleList()
        self.dec = nn.ModuleList()
        ch = mid
        for w in reversed(widths[:-1]):
            self.up.append(
                nn.Sequential(nn.Upsample(scale_factor=2, mode="nearest"), nn.Conv2d(ch, w, 1))
            )
            self.dec.append(ConvBlock(w * 2, w))
            ch = w
        self.head = nn.Conv2d(ch, out_channels, 1)
        # Zero head: an untrained net predicts exactly 0 regardless of width,
        # depth, or input channel count, so fresh models of any configuration
        # score identically and the first training steps start from the same
        # reference output.
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x):
        skips = []
        for block, att in zip(self.enc, self.att):
            x = att(block(x))
            skips.append(x)
            x = self.pool(x)
        x = self.mid(x)
        for up, dec, skip in zip(self.up, self.dec, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([x, skip], dim=1))
        return self.head(x)


#: Registered architectures: constructor kwargs for GridUNet.
ARCHITECTURES: dict[str, dict] = {
    "im2ele-mini": {"base": 16, "depth": 3, "bottleneck": "plain", "squeeze_excite": True},
    "litradiounet": {"base": 16, "depth": 4, "bottleneck": "plain", "squeeze_excite": False},
    "litunetdcn": {"base": 16, "depth": 4, "bottleneck": "dilated", "squeeze_excite": False},
    "litpmnet": {"base": 16, "depth": 4, "bottleneck": "context", "squeeze_excite": False},
}


def arch_config(name: str) -> dict:
    if name not in ARCHITECTURES:
        raise InvalidArgumentError(
            f"unknown architecture {name!r}; known: {sorted(ARCHITECTURES)}"
        )
    return dict(ARCHITECTURES[name])


def build_net(name: str, in_channels: int, out_channels: int = 1) -> GridUNet:
    return GridUNet(in_channels, out_channels, **arch_config(name))
