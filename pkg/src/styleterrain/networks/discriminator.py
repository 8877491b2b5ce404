"""Convolutional critic mirroring the generator's resolution ladder."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from .generator import stage_channels, stage_resolutions
from .layers import EqualConv2d, EqualLinear, minibatch_stddev


class DiscriminatorBlock(nn.Module):
    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.conv0 = EqualConv2d(in_ch, in_ch, 3, padding=1)
        self.conv1 = EqualConv2d(in_ch, out_ch, 3, padding=1)

    def forward(self, x):
        x = F.leaky_relu(self.conv0(x), 0.2) * math.sqrt(2)
        x = F.leaky_relu(self.conv1(x), 0.2) * math.sqrt(2)
        return F.avg_pool2d(x, 2)


class Discriminator(nn.Module):
    def __init__(self, resolution: int, channel_base: int = 1024,
                 channel_max: int = 64):
        super().__init__()
        channels = stage_channels(resolution, channel_base, channel_max)
        resolutions = stage_resolutions(resolution)[::-1]  # high -> low
        self.from_height = EqualConv2d(1, channels[resolutions[0]], 1)
        blocks = []
        for res in resolutions[:-1]:
            blocks.append(DiscriminatorBlock(channels[res], channels[res // 2]))
        self.blocks = nn.ModuleList(blocks)
        final_ch = channels[4]
        self.final_conv = EqualConv2d(final_ch + 1, final_ch, 3, padding=1)
        self.final_fc = EqualLinear(final_ch * 16, final_ch, activate=True)
        self.out = EqualLinear(final_ch, 1)

    def forward(self, x):
        x = F.leaky_relu(self.from_height(x), 0.2) * math.sqrt(2)
        for block in self.blocks:
            x = block(x)
        x = minibatch_stddev(x)
        x = F.leaky_relu(self.final_conv(x), 0.2) * math.sqrt(2)
        x = self.final_fc(x.flatten(1))
        return self.out(x)
