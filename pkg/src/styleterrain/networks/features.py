"""Feature-space distance for perceptual loss terms.

No pretrained backbone is assumed: the default extractor is a fixed,
seed-initialized convolution stack (frozen at construction), exposed behind
a plain callable interface so a pretrained network can be substituted where
one is available.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


class RandomConvFeatures(nn.Module):
    """Fixed random convolutional pyramid; distance is the mean MSE between
    feature maps at each depth."""

    def __init__(self, seed: int = 0, channels=(16, 32, 64)):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        convs = []
        in_ch = 1
        for out_ch in channels:
            w = torch.randn(out_ch, in_ch, 3, 3, generator=gen)
            w = w / math.sqrt(in_ch * 9)
            convs.append(w)
            in_ch = out_ch
        for i, w in enumerate(convs):
            self.register_buffer(f"w{i}", w)
        self.depth = len(channels)

    def features(self, x):
        feats = []
        for i in range(self.depth):
            x = F.leaky_relu(F.conv2d(x, getattr(self, f"w{i}"), stride=2,
                                      padding=1), 0.2)
            feats.append(x)
        return feats

    def forward(self, a, b):
        fa, fb = self.features(a), self.features(b)
        return sum(F.mse_loss(x, y) for x, y in zip(fa, fb)) / self.depth


def feature_distance(backbone=None) -> nn.Module:
    """Resolve a feature-distance callable; None selects the fixed random
    stack. Any module mapping (a, b) -> scalar tensor is accepted."""
    if backbone is None:
        return RandomConvFeatures()
    return backbone
