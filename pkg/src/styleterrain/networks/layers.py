"""Building blocks shared by the generator, discriminator, and encoder:
equalized-learning-rate layers, style-modulated convolution, and noise
injection."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


class PixelNorm(nn.Module):
    def forward(self, x):
        return x * torch.rsqrt(x.pow(2).mean(dim=1, keepdim=True) + 1e-8)


class EqualLinear(nn.Module):
    """Linear layer with runtime He scaling and an optional lr multiplier."""

    def __init__(self, in_features, out_features, bias_init=0.0, lr_mul=1.0,
                 activate=False):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_features, in_features) / lr_mul)
        self.bias = nn.Parameter(torch.full((out_features,), float(bias_init)))
        self.scale = lr_mul / math.sqrt(in_features)
        self.lr_mul = lr_mul
        self.activate = activate

    def forward(self, x):
        out = F.linear(x, self.weight * self.scale, self.bias * self.lr_mul)
        if self.activate:
            out = F.leaky_relu(out, 0.2) * math.sqrt(2)
        return out


class EqualConv2d(nn.Module):
    def __init__(self, in_ch, out_ch, kernel_size, stride=1, padding=0,
                 bias=True):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_ch, in_ch, kernel_size,
                                               kernel_size))
        self.bias = nn.Parameter(torch.zeros(out_ch)) if bias else None
        self.scale = 1.0 / math.sqrt(in_ch * kernel_size * kernel_size)
        self.stride = stride
        self.padding = padding

    def forward(self, x):
        return F.conv2d(x, self.weight * self.scale, self.bias,
                        stride=self.stride, padding=self.padding)


class ModulatedConv2d(nn.Module):
    """3x3 convolution whose per-input-channel weights are scaled by a style
    vector, then demodulated for unit output variance (grouped-conv trick,
    one weight set per batch sample)."""

    def __init__(self, in_ch, out_ch, style_dim, kernel_size=3,
                 demodulate=True):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(1, out_ch, in_ch, kernel_size,
                                               kernel_size))
        self.affine = EqualLinear(style_dim, in_ch, bias_init=1.0)
        self.scale = 1.0 / math.sqrt(in_ch * kernel_size * kernel_size)
        self.padding = kernel_size // 2
        self.demodulate = demodulate
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel_size = kernel_size

    def forward(self, x, w):
        batch, _, height, width = x.shape
        style = self.affine(w).view(batch, 1, self.in_ch, 1, 1)
        weight = self.scale * self.weight * style
        if self.demodulate:
            demod = torch.rsqrt(weight.pow(2).sum(dim=(2, 3, 4)) + 1e-8)
            weight = weight * demod.view(batch, self.out_ch, 1, 1, 1)
        weight = weight.view(batch * self.out_ch, self.in_ch,
                             self.kernel_size, self.kernel_size)
        x = x.reshape(1, batch * self.in_ch, height, width)
        out = F.conv2d(x, weight, padding=self.padding, groups=batch)
        return out.view(batch, self.out_ch, height, width)


class StyleLayer(nn.Module):
    """Modulated conv + per-stage additive noise + bias + leaky ReLU."""

    def __init__(self, in_ch, out_ch, style_dim, upsample=False):
        super().__init__()
        self.upsample = upsample
        self.conv = ModulatedConv2d(in_ch, out_ch, style_dim)
        self.noise_strength = nn.Parameter(torch.zeros(()))
        self.bias = nn.Parameter(torch.zeros(out_ch))

    def forward(self, x, w, noise):
        if self.upsample:
            x = F.interpolate(x, scale_factor=2, mode="bilinear",
                              align_corners=False)
        x = self.conv(x, w)
        if noise is not None:
            x = x + self.noise_strength * noise
        x = x + self.bias.view(1, -1, 1, 1)
        return F.leaky_relu(x, 0.2) * math.sqrt(2)


def minibatch_stddev(x, group_size=4):
    """Append the per-group feature stddev as one extra channel."""
    b, c, h, w = x.shape
    g = min(group_size, b)
    while b % g:
        g -= 1
    y = x.view(g, -1, c, h, w)
    y = y - y.mean(dim=0, keepdim=True)
    y = y.pow(2).mean(dim=0).add(1e-8).sqrt()
    y = y.mean(dim=(1, 2, 3), keepdim=True)
    y = y.repeat(g, 1, h, w)
    return torch.cat([x, y], dim=1)
