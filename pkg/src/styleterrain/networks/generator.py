"""Style-based generator: a mapping network projecting latents into a
disentangled style space, and a synthesis network growing a terrain from a
learned 4x4 basis, doubling resolution per stage with two style injections
per stage."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from .layers import EqualConv2d, EqualLinear, PixelNorm, StyleLayer


def stage_resolutions(resolution: int) -> list[int]:
    return [4 * 2 ** i for i in range(int(math.log2(resolution)) - 1)]


def num_style_layers(resolution: int) -> int:
    """Two style injections per synthesis stage: 2 * (log2(R) - 1)."""
    return 2 * (int(math.log2(resolution)) - 1)


def stage_channels(resolution: int, channel_base: int,
                   channel_max: int) -> dict[int, int]:
    return {res: min(channel_base // res, channel_max)
            for res in stage_resolutions(resolution)}


class MappingNetwork(nn.Module):
    def __init__(self, latent_dim: int, n_layers: int = 4, lr_mul: float = 0.01):
        super().__init__()
        self.norm = PixelNorm()
        self.layers = nn.ModuleList([
            EqualLinear(latent_dim, latent_dim, lr_mul=lr_mul, activate=True)
            for _ in range(n_layers)
        ])

    def forward(self, z):
        x = self.norm(z)
        for layer in self.layers:
            x = layer(x)
        return x


class SynthesisNetwork(nn.Module):
    """Starts from a learned constant and doubles resolution per stage.

    Each stage runs two style-modulated convolutions (the first upsampling,
    except at the base) and contributes a one-channel height map; stage
    outputs accumulate through upsampled skips and a final sigmoid keeps the
    result in [0, 1].
    """

    def __init__(self, resolution: int, latent_dim: int,
                 channel_base: int = 1024, channel_max: int = 64):
        super().__init__()
        self.resolution = resolution
        self.resolutions = stage_resolutions(resolution)
        channels = stage_channels(resolution, channel_base, channel_max)
        self.num_ws = num_style_layers(resolution)
        self.const = nn.Parameter(torch.randn(1, channels[4], 4, 4))
        self.convs = nn.ModuleList()
        self.to_height = nn.ModuleList()
        in_ch = channels[4]
        for i, res in enumerate(self.resolutions):
            out_ch = channels[res]
            self.convs.append(StyleLayer(in_ch, out_ch, latent_dim,
                                         upsample=(i > 0)))
            self.convs.append(StyleLayer(out_ch, out_ch, latent_dim))
            self.to_height.append(EqualConv2d(out_ch, 1, 1))
            in_ch = out_ch

    def forward(self, w_plus, noise=None):
        if w_plus.shape[1] != self.num_ws:
            raise ValueError(f"expected {self.num_ws} style rows, "
                             f"got {w_plus.shape[1]}")
        if noise is None:
            noise = [None] * self.num_ws
        batch = w_plus.shape[0]
        x = self.const.expand(batch, -1, -1, -1)
        height = None
        for i in range(len(self.resolutions)):
            x = self.convs[2 * i](x, w_plus[:, 2 * i], noise[2 * i])
            x = self.convs[2 * i + 1](x, w_plus[:, 2 * i + 1], noise[2 * i + 1])
            h = self.to_height[i](x)
            if height is None:
                height = h
            else:
                height = F.interpolate(height, scale_factor=2, mode="bilinear",
                                       align_corners=False) + h
        return torch.sigmoid(height)


class Generator(nn.Module):
    def __init__(self, resolution: int, latent_dim: int, mapping_layers: int = 4,
                 channel_base: int = 1024, channel_max: int = 64):
        super().__init__()
        self.latent_dim = latent_dim
        self.mapping = MappingNetwork(latent_dim, n_layers=mapping_layers)
        self.synthesis = SynthesisNetwork(resolution, latent_dim,
                                          channel_base, channel_max)

    @property
    def num_ws(self):
        return self.synthesis.num_ws

    def forward(self, z, noise=None):
        w = self.mapping(z)
        w_plus = w.unsqueeze(1).repeat(1, self.num_ws, 1)
        return self.synthesis(w_plus, noise)


def make_noise(resolution: int, seed: int, batch: int = 1,
               device="cpu") -> list[torch.Tensor]:
    """Frozen per-stage noise: drawn deterministically from the seed, one
    buffer per style layer, shared across the batch."""
    gen = torch.Generator(device=device)
    gen.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
    out = []
    for res in stage_resolutions(resolution):
        for _ in range(2):
            n = torch.randn(1, 1, res, res, generator=gen, device=device)
            out.append(n.expand(batch, -1, -1, -1))
    return out


def make_random_noise(resolution: int, batch: int,
                      device="cpu") -> list[torch.Tensor]:
    """Fresh noise per call (training policy)."""
    out = []
    for res in stage_resolutions(resolution):
        for _ in range(2):
            out.append(torch.randn(batch, 1, res, res, device=device))
    return out
