"""Terrain-to-latent encoder: a strided convolutional trunk pooled to a
shared feature, with one linear head per style row."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from .generator import num_style_layers
from .layers import EqualConv2d, EqualLinear


class Encoder(nn.Module):
    def __init__(self, resolution: int, latent_dim: int,
                 base_channels: int = 16, max_channels: int = 128,
                 feature_dim: int = 256):
        super().__init__()
        self.resolution = resolution
        self.num_ws = num_style_layers(resolution)
        convs = [EqualConv2d(1, base_channels, 3, padding=1)]
        ch = base_channels
        res = resolution
        while res > 4:
            out_ch = min(ch * 2, max_channels)
            convs.append(EqualConv2d(ch, out_ch, 3, stride=2, padding=1))
            ch = out_ch
            res //= 2
        self.convs = nn.ModuleList(convs)
        self.fc = EqualLinear(ch * 4 * 4, feature_dim, activate=True)
        self.heads = nn.ModuleList([
            EqualLinear(feature_dim, latent_dim) for _ in range(self.num_ws)
        ])

    def forward(self, x):
        if x.shape[-1] != self.resolution or x.shape[-2] != self.resolution:
            raise ValueError(f"encoder expects {self.resolution}x"
                             f"{self.resolution} inputs, got "
                             f"{x.shape[-2]}x{x.shape[-1]}")
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2) * math.sqrt(2)
        feat = self.fc(x.flatten(1))
        rows = [head(feat) for head in self.heads]
        return torch.stack(rows, dim=1)
